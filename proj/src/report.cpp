#include "attkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "attkit/errors.hpp"

namespace attkit {

namespace {

std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

std::string fmt12(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12g", v);
  return buffer;
}

std::string pad_left(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s;
  return std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s;
  return s + std::string(width - s.size(), ' ');
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

nlohmann::json result_to_json(const MethodResult& result) {
  nlohmann::json j;
  j["method"] = to_string(result.weights.method());
  j["att"] = result.estimate.att;
  j["ess"] = {{"treated", result.balance.ess_treated},
              {"control", result.balance.ess_control}};
  j["nominal"] = {{"treated", result.balance.nominal_treated},
                  {"control", result.balance.nominal_control}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.balance.rows) {
    rows.push_back({{"name", row.name},
                    {"treated", row.treated_weighted_mean},
                    {"control", row.control_weighted_mean},
                    {"target", row.target_mean},
                    {"sd_t", row.std_diff_treated},
                    {"sd_c", row.std_diff_control}});
  }
  j["balance"] = std::move(rows);
  j["negative_weights"] = {{"count", result.negatives.count},
                           {"ids", result.negatives.ids}};
  j["sample_bounded"] = !result.boundedness.outside;
  return j;
}

}  // namespace

const char* to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::kText:
      return "text";
    case ReportFormat::kJson:
      return "json";
    case ReportFormat::kCsv:
      return "csv";
    case ReportFormat::kSvg:
      return "svg";
  }
  return "?";
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "text") return ReportFormat::kText;
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "svg") return ReportFormat::kSvg;
  throw ValidationError("unknown report format '" + s + "'");
}

std::string render_text(const MethodResult& result) {
  std::ostringstream out;
  out << "method: " << to_string(result.weights.method()) << "\n";
  out << "att: " << fmt6(result.estimate.att) << "\n";
  out << "weighted outcome means: treated " << fmt6(result.estimate.treated_mean)
      << ", control " << fmt6(result.estimate.control_mean) << "\n";
  out << "ess/nominal: treated " << fmt6(result.balance.ess_treated) << " / "
      << result.balance.nominal_treated;
  if (result.balance.ess_caveat_treated) out << " (negative weights)";
  out << ", control " << fmt6(result.balance.ess_control) << " / "
      << result.balance.nominal_control;
  if (result.balance.ess_caveat_control) out << " (negative weights)";
  out << "\n";
  out << "balance (weighted means vs target; gaps in pooled-sd units):\n";
  out << "  " << pad_right("covariate", 20) << pad_left("treated", 12)
      << pad_left("control", 12) << pad_left("target", 12)
      << pad_left("sd_t", 12) << pad_left("sd_c", 12) << "\n";
  for (const auto& row : result.balance.rows) {
    out << "  " << pad_right(row.name, 20)
        << pad_left(fmt6(row.treated_weighted_mean), 12)
        << pad_left(fmt6(row.control_weighted_mean), 12)
        << pad_left(fmt6(row.target_mean), 12)
        << pad_left(fmt6(row.std_diff_treated), 12)
        << pad_left(fmt6(row.std_diff_control), 12) << "\n";
  }
  if (result.negatives.count == 0) {
    out << "negative weights: none\n";
  } else {
    out << "negative weights: " << result.negatives.count << " (";
    for (std::size_t i = 0; i < result.negatives.ids.size(); ++i) {
      if (i > 0) out << ", ";
      out << result.negatives.ids[i];
    }
    out << "); mass " << fmt6(result.negatives.total_negative_mass) << "\n";
  }
  out << "sample bounded: " << (result.boundedness.outside ? "no" : "yes")
      << " [" << fmt6(result.boundedness.interval_low) << ", "
      << fmt6(result.boundedness.interval_high) << "]\n";
  return out.str();
}

std::string render_text(const std::vector<MethodResult>& results) {
  std::ostringstream out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (i > 0) out << std::string(64, '-') << "\n";
    out << render_text(results[i]);
  }
  return out.str();
}

std::string render_json(const MethodResult& result) {
  return result_to_json(result).dump(2) + "\n";
}

std::string render_json(const std::vector<MethodResult>& results) {
  nlohmann::json array = nlohmann::json::array();
  for (const auto& r : results) array.push_back(result_to_json(r));
  return array.dump(2) + "\n";
}

std::string render_csv(const std::vector<MethodResult>& results) {
  if (results.empty()) throw ValidationError("no results to render");
  std::ostringstream out;
  out << "method,att,treated_mean,control_mean,ess_treated,ess_control,"
      << "nominal_treated,nominal_control,negative_count,sample_bounded";
  for (const auto& row : results.front().balance.rows) {
    const std::string name = csv_escape(row.name);
    out << "," << name << "_treated," << name << "_control," << name
        << "_target," << name << "_sd_t," << name << "_sd_c";
  }
  out << "\n";
  for (const auto& r : results) {
    out << to_string(r.weights.method()) << "," << fmt12(r.estimate.att) << ","
        << fmt12(r.estimate.treated_mean) << ","
        << fmt12(r.estimate.control_mean) << ","
        << fmt12(r.balance.ess_treated) << "," << fmt12(r.balance.ess_control)
        << "," << r.balance.nominal_treated << ","
        << r.balance.nominal_control << "," << r.negatives.count << ","
        << (r.boundedness.outside ? 0 : 1);
    for (const auto& row : r.balance.rows) {
      out << "," << fmt12(row.treated_weighted_mean) << ","
          << fmt12(row.control_weighted_mean) << "," << fmt12(row.target_mean)
          << "," << fmt12(row.std_diff_treated) << ","
          << fmt12(row.std_diff_control);
    }
    out << "\n";
  }
  return out.str();
}

std::string render_svg(const Dataset& data, const MethodResult& result) {
  const int p = data.p();
  const double height = 480.0;
  const double top = 96.0;
  const double bottom = height - 64.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" "
         "height=\"480\" viewBox=\"0 0 960 480\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"960\" height=\"480\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"480\" y=\"30\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"20\">"
      << to_string(result.weights.method()) << ": att "
      << fmt6(result.estimate.att) << "</text>\n";

  // Left panel: means-vs-target dot plot in pooled-sd units.
  {
    const double axis_left = 150.0;
    const double axis_right = 520.0;
    const double center = 0.5 * (axis_left + axis_right);
    const double half_span = 0.5 * (axis_right - axis_left);
    const double row_h = std::min(52.0, (bottom - top) / std::max(p, 1));

    const Eigen::VectorXd raw_control = data.control_mean_profile();
    std::vector<double> raw_gap(static_cast<std::size_t>(p));
    double largest = 0.0;
    for (int j = 0; j < p; ++j) {
      const auto& row = result.balance.rows[static_cast<std::size_t>(j)];
      const double sd = data.pooled_sd(j);
      raw_gap[static_cast<std::size_t>(j)] =
          sd > 0.0 ? (raw_control(j) - row.target_mean) / sd : 0.0;
      for (double g : {raw_gap[static_cast<std::size_t>(j)],
                       row.std_diff_treated, row.std_diff_control}) {
        if (std::isfinite(g)) largest = std::max(largest, std::abs(g));
      }
    }
    const double limit = std::max(0.25, 1.15 * largest);
    const auto x_of = [&](double gap) {
      const double clamped = std::clamp(gap, -limit, limit);
      return center + (clamped / limit) * half_span;
    };

    svg << "<text x=\"" << center
        << "\" y=\"58\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">means vs target (pooled-sd units)</text>\n";
    for (int t = -2; t <= 2; ++t) {
      const double value = limit * t / 2.0;
      const double x = x_of(value);
      svg << "<line x1=\"" << x << "\" y1=\"" << top - 8 << "\" x2=\"" << x
          << "\" y2=\"" << top + p * row_h << "\" stroke=\""
          << (t == 0 ? "#444444" : "#dddddd") << "\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << x << "\" y=\"" << top - 14
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"11\">"
          << fmt6(value) << "</text>\n";
    }
    for (int j = 0; j < p; ++j) {
      const auto& row = result.balance.rows[static_cast<std::size_t>(j)];
      const double y = top + (j + 0.5) * row_h;
      svg << "<text x=\"12\" y=\"" << y + 4
          << "\" font-family=\"sans-serif\" font-size=\"13\">" << row.name
          << "</text>\n";
      svg << "<line x1=\"" << axis_left << "\" y1=\"" << y << "\" x2=\""
          << axis_right << "\" y2=\"" << y
          << "\" stroke=\"#f0f0f0\" stroke-width=\"1\"/>\n";
      svg << "<circle cx=\"" << x_of(raw_gap[static_cast<std::size_t>(j)])
          << "\" cy=\"" << y << "\" r=\"6\" fill=\"#9aa0a6\"/>\n";
      const double cg = row.std_diff_control;
      const char* control_fill =
          std::isfinite(cg) && std::abs(cg) <= 0.1 ? "#188038" : "#d93025";
      svg << "<circle cx=\"" << x_of(cg) << "\" cy=\"" << y
          << "\" r=\"6\" fill=\"" << control_fill << "\"/>\n";
      svg << "<rect x=\"" << x_of(row.std_diff_treated) - 5 << "\" y=\""
          << y - 5 << "\" width=\"10\" height=\"10\" fill=\"#1a73e8\"/>\n";
    }
    const double legend_y = height - 26.0;
    svg << "<circle cx=\"28\" cy=\"" << legend_y
        << "\" r=\"6\" fill=\"#9aa0a6\"/><text x=\"40\" y=\"" << legend_y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">unweighted control"
           "</text>\n";
    svg << "<circle cx=\"180\" cy=\"" << legend_y
        << "\" r=\"6\" fill=\"#188038\"/><text x=\"192\" y=\"" << legend_y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">weighted control"
           "</text>\n";
    svg << "<rect x=\"325\" y=\"" << legend_y - 5
        << "\" width=\"10\" height=\"10\" fill=\"#1a73e8\"/><text x=\"341\" "
           "y=\""
        << legend_y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">weighted treated"
           "</text>\n";
  }

  // Right panel: histogram of the unit weights.
  {
    const double panel_left = 600.0;
    const double panel_right = 930.0;
    const double panel_bottom = bottom;
    const double panel_top = top;
    const Eigen::VectorXd& w = result.weights.weights();
    double w_min = w.minCoeff();
    double w_max = w.maxCoeff();
    if (w_max - w_min < 1e-12) {
      w_min -= 0.5;
      w_max += 0.5;
    }
    constexpr int kBins = 16;
    std::vector<int> counts(kBins, 0);
    for (int i = 0; i < w.size(); ++i) {
      int bin = static_cast<int>((w(i) - w_min) / (w_max - w_min) * kBins);
      bin = std::clamp(bin, 0, kBins - 1);
      ++counts[static_cast<std::size_t>(bin)];
    }
    const int peak = *std::max_element(counts.begin(), counts.end());
    const double bar_w = (panel_right - panel_left) / kBins;

    svg << "<text x=\"" << 0.5 * (panel_left + panel_right)
        << "\" y=\"58\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">weight histogram</text>\n";
    svg << "<line x1=\"" << panel_left << "\" y1=\"" << panel_bottom
        << "\" x2=\"" << panel_right << "\" y2=\"" << panel_bottom
        << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    for (int b = 0; b < kBins; ++b) {
      const int count = counts[static_cast<std::size_t>(b)];
      if (count == 0) continue;
      const double h =
          (panel_bottom - panel_top) * static_cast<double>(count) / peak;
      const double lo_edge = w_min + (w_max - w_min) * b / kBins;
      const double hi_edge = w_min + (w_max - w_min) * (b + 1) / kBins;
      const char* fill = hi_edge <= 0.0 ? "#d93025"
                         : lo_edge < 0.0 ? "#f29900"
                                         : "#1a73e8";
      svg << "<rect x=\"" << panel_left + b * bar_w + 1 << "\" y=\""
          << panel_bottom - h << "\" width=\"" << bar_w - 2 << "\" height=\""
          << h << "\" fill=\"" << fill << "\"/>\n";
    }
    // Zero marker when the range spans it.
    if (w_min < 0.0 && w_max > 0.0) {
      const double x0 =
          panel_left + (0.0 - w_min) / (w_max - w_min) * (panel_right - panel_left);
      svg << "<line x1=\"" << x0 << "\" y1=\"" << panel_top << "\" x2=\"" << x0
          << "\" y2=\"" << panel_bottom
          << "\" stroke=\"#444444\" stroke-width=\"1\" "
             "stroke-dasharray=\"4 3\"/>\n";
    }
    svg << "<text x=\"" << panel_left << "\" y=\"" << panel_bottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt6(w_min) << "</text>\n";
    svg << "<text x=\"" << panel_right << "\" y=\"" << panel_bottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt6(w_max) << "</text>\n";
    svg << "<text x=\"" << panel_left - 10 << "\" y=\"" << panel_top + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << peak << "</text>\n";
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace attkit
