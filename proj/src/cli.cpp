#include "attkit/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "attkit/balance.hpp"
#include "attkit/csv.hpp"
#include "attkit/dataset.hpp"
#include "attkit/errors.hpp"
#include "attkit/pipeline.hpp"
#include "attkit/report.hpp"
#include "attkit/synthetic.hpp"

namespace attkit {

namespace {

constexpr WeightMethod kCanonicalOrder[] = {
    WeightMethod::kUri,  WeightMethod::kMri,          WeightMethod::kIpw,
    WeightMethod::kSbw,  WeightMethod::kPairMatch,    WeightMethod::kProfileMatch,
    WeightMethod::kUniform};

int canonical_rank(WeightMethod m) {
  int rank = 0;
  for (WeightMethod candidate : kCanonicalOrder) {
    if (candidate == m) return rank;
    ++rank;
  }
  return rank;
}

struct CommonOptions {
  std::string data;
  std::string id;
  std::string treatment = "treatment";
  std::string outcome = "outcome";
  std::vector<std::string> covariates;
  std::string method = "uri";
  double delta = 0.02;
  double tolerance = 0.1;
  std::string metric = "mahalanobis";
  std::string target = "att";
  std::string format = "text";
  std::string out = "-";
};

void add_data_flags(CLI::App* cmd, CommonOptions* options) {
  cmd->add_option("--data", options->data, "input csv path")->required();
  cmd->add_option("--id", options->id, "id column (default: 'id' when present)");
  cmd->add_option("--treatment", options->treatment, "treatment column (0/1)");
  cmd->add_option("--outcome", options->outcome, "outcome column");
  cmd->add_option("--covariates", options->covariates,
                  "comma-separated covariate columns (default: all others)")
      ->delimiter(',');
}

void add_method_flags(CLI::App* cmd, CommonOptions* options, bool allow_all) {
  std::string help = "uri|mri|ipw|sbw|pair|profile|uniform";
  if (allow_all) help += "|all";
  cmd->add_option("--method", options->method, help);
  cmd->add_option("--delta", options->delta, "sbw balance window, pooled-sd units");
  cmd->add_option("--tolerance", options->tolerance,
                  "profile-match window, pooled-sd units");
  cmd->add_option("--metric", options->metric,
                  "mahalanobis|normalized_euclidean");
  cmd->add_option("--target", options->target, "estimand (only 'att')");
}

Dataset load_data(const CommonOptions& options) {
  CsvSchema schema;
  schema.id = options.id;
  schema.treatment = options.treatment;
  schema.outcome = options.outcome;
  schema.covariates = options.covariates;
  return load_csv(options.data, schema);
}

PipelineOptions pipeline_options(const CommonOptions& options) {
  if (options.target != "att") {
    throw ValidationError("only the att estimand is supported");
  }
  PipelineOptions out;
  out.delta = options.delta;
  out.tolerance = options.tolerance;
  out.metric = distance_metric_from_string(options.metric);
  return out;
}

void write_output(const std::string& out, const std::string& payload) {
  if (out == "-" || out.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw ValidationError("cannot write '" + out + "'");
  file << payload;
}

std::vector<WeightMethod> parse_method_list(const std::string& method,
                                            bool allow_all) {
  if (method == "all") {
    if (!allow_all) throw ValidationError("this subcommand needs one method");
    return {std::begin(kCanonicalOrder), std::end(kCanonicalOrder)};
  }
  return {weight_method_from_string(method)};
}

// Results render in canonical method order no matter how the run was
// ordered, so compare output is byte-stable under shuffles.
void sort_canonically(std::vector<MethodResult>* results) {
  std::sort(results->begin(), results->end(),
            [](const MethodResult& a, const MethodResult& b) {
              return canonical_rank(a.weights.method()) <
                     canonical_rank(b.weights.method());
            });
}

std::string render_many(const Dataset& data,
                        std::vector<MethodResult> results,
                        ReportFormat format) {
  sort_canonically(&results);
  switch (format) {
    case ReportFormat::kText:
      return render_text(results);
    case ReportFormat::kJson:
      return render_json(results);
    case ReportFormat::kCsv:
      return render_csv(results);
    case ReportFormat::kSvg:
      if (results.size() != 1) {
        throw ValidationError("svg output supports a single method");
      }
      return render_svg(data, results.front());
  }
  throw ValidationError("unknown report format");
}

int run_analyze(const CommonOptions& options) {
  const Dataset data = load_data(options);
  const PipelineOptions base = pipeline_options(options);
  const std::vector<WeightMethod> methods =
      parse_method_list(options.method, true);
  std::vector<MethodResult> results = run_methods(data, methods, base);
  write_output(options.out, render_many(data, std::move(results),
                                        report_format_from_string(options.format)));
  return 0;
}

int run_weights(const CommonOptions& options) {
  const Dataset data = load_data(options);
  PipelineOptions base = pipeline_options(options);
  base.method = parse_method_list(options.method, false).front();
  const MethodResult result = run_method(data, base);
  std::ostringstream out;
  out << "id,treatment,weight\n";
  char buffer[64];
  for (int i = 0; i < data.n(); ++i) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", result.weights.weight(i));
    out << data.unit(i).id << "," << (data.unit(i).treated ? 1 : 0) << ","
        << buffer << "\n";
  }
  write_output(options.out, out.str());
  return 0;
}

int run_balance(const CommonOptions& options) {
  const Dataset data = load_data(options);
  PipelineOptions base = pipeline_options(options);
  base.method = parse_method_list(options.method, false).front();
  const MethodResult result = run_method(data, base);
  const BalanceTable& table = result.balance;
  const ReportFormat format = report_format_from_string(options.format);
  std::string payload;
  if (format == ReportFormat::kJson) {
    nlohmann::json j;
    j["ess"] = {{"treated", table.ess_treated}, {"control", table.ess_control}};
    j["nominal"] = {{"treated", table.nominal_treated},
                    {"control", table.nominal_control}};
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
      rows.push_back({{"name", row.name},
                      {"treated", row.treated_weighted_mean},
                      {"control", row.control_weighted_mean},
                      {"target", row.target_mean},
                      {"sd_t", row.std_diff_treated},
                      {"sd_c", row.std_diff_control}});
    }
    j["balance"] = std::move(rows);
    payload = j.dump(2) + "\n";
  } else if (format == ReportFormat::kCsv) {
    std::ostringstream out;
    out << "name,treated,control,target,sd_t,sd_c\n";
    char buffer[64];
    for (const auto& row : table.rows) {
      out << row.name;
      for (double v : {row.treated_weighted_mean, row.control_weighted_mean,
                       row.target_mean, row.std_diff_treated,
                       row.std_diff_control}) {
        std::snprintf(buffer, sizeof(buffer), "%.12g", v);
        out << "," << buffer;
      }
      out << "\n";
    }
    payload = out.str();
  } else if (format == ReportFormat::kText) {
    payload = render_text(result);
  } else {
    payload = render_svg(data, result);
  }
  write_output(options.out, payload);
  return 0;
}

struct GenerateOptions {
  std::uint64_t seed = 1;
  int n_treated = 100;
  int n_control = 200;
  std::string outcome_model = "curved";
  bool no_outlier = false;
  double att = -5.0;
  std::string out = "-";
};

int run_generate(const GenerateOptions& options) {
  GeneratorConfig config;
  config.seed = options.seed;
  config.n_treated = options.n_treated;
  config.n_control = options.n_control;
  config.true_att = options.att;
  if (options.outcome_model == "linear") {
    config.outcome_model = OutcomeModel::kLinear;
  } else if (options.outcome_model == "curved") {
    config.outcome_model = OutcomeModel::kCurved;
  } else {
    throw ValidationError("outcome model must be linear or curved");
  }
  if (options.no_outlier) config.outlier.reset();
  const Dataset data = generate_synthetic_example(config);
  write_output(options.out, dataset_to_csv(data));
  return 0;
}

int run_compare(const CommonOptions& options,
                const std::vector<std::string>& order) {
  const Dataset data = load_data(options);
  const PipelineOptions base = pipeline_options(options);
  std::vector<WeightMethod> methods;
  if (order.empty()) {
    methods.assign(std::begin(kCanonicalOrder), std::end(kCanonicalOrder));
  } else {
    for (const auto& name : order) {
      methods.push_back(weight_method_from_string(name));
    }
  }
  std::vector<MethodResult> results = run_methods(data, methods, base);
  write_output(options.out, render_many(data, std::move(results),
                                        report_format_from_string(options.format)));
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"implied regression weights, balance diagnostics, and the ATT "
               "as a weighted contrast"};
  app.require_subcommand(1);

  CommonOptions analyze_options;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "run one method (or all) and render the report");
  add_data_flags(analyze, &analyze_options);
  add_method_flags(analyze, &analyze_options, true);
  analyze->add_option("--format", analyze_options.format, "text|json|csv|svg");
  analyze->add_option("--out", analyze_options.out, "output path, - for stdout");

  CommonOptions weights_options;
  CLI::App* weights = app.add_subcommand(
      "weights", "emit per-unit weights for one method as csv");
  add_data_flags(weights, &weights_options);
  add_method_flags(weights, &weights_options, false);
  weights->add_option("--out", weights_options.out, "output path, - for stdout");

  CommonOptions balance_options;
  CLI::App* balance = app.add_subcommand(
      "balance", "emit the balance table for one method");
  add_data_flags(balance, &balance_options);
  add_method_flags(balance, &balance_options, false);
  balance->add_option("--format", balance_options.format, "text|json|csv|svg");
  balance->add_option("--out", balance_options.out, "output path, - for stdout");

  GenerateOptions generate_options;
  CLI::App* generate = app.add_subcommand(
      "generate", "emit a synthetic running-example dataset as csv");
  generate->add_option("--seed", generate_options.seed, "rng seed");
  generate->add_option("--n-treated", generate_options.n_treated, "treated units");
  generate->add_option("--n-control", generate_options.n_control, "control units");
  generate->add_option("--outcome-model", generate_options.outcome_model,
                       "linear|curved");
  generate->add_flag("--no-outlier", generate_options.no_outlier,
                     "skip the appended outlier control");
  generate->add_option("--att", generate_options.att, "true treatment effect");
  generate->add_option("--out", generate_options.out, "output path, - for stdout");

  CommonOptions compare_options;
  std::vector<std::string> compare_order;
  CLI::App* compare = app.add_subcommand(
      "compare", "run every method and render one combined report");
  add_data_flags(compare, &compare_options);
  add_method_flags(compare, &compare_options, true);
  compare->add_option("--format", compare_options.format, "text|json|csv");
  compare->add_option("--out", compare_options.out, "output path, - for stdout");
  compare->add_option("--order", compare_order,
                      "execution order of methods (output stays canonical)")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*analyze) return run_analyze(analyze_options);
    if (*weights) return run_weights(weights_options);
    if (*balance) return run_balance(balance_options);
    if (*generate) return run_generate(generate_options);
    if (*compare) return run_compare(compare_options, compare_order);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace attkit
