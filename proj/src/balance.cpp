#include "attkit/balance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attkit/errors.hpp"

namespace attkit {

namespace {

// Weighted group mean of covariate j with the mean-one convention:
// (1/n_g) sum_g w_i x_ij.
double weighted_group_mean(const Dataset& data, const WeightVector& weights,
                           const std::vector<int>& idx, int j) {
  double acc = 0.0;
  for (int i : idx) acc += weights.weight(i) * data.covariates()(i, j);
  return acc / static_cast<double>(idx.size());
}

double standardized_gap(double gap, double sd) {
  if (sd > 0.0) return gap / sd;
  if (gap == 0.0) return 0.0;
  return gap > 0.0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
}

}  // namespace

double effective_sample_size(const WeightVector& weights, Group group) {
  const auto& idx = weights.group_indices(group);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i : idx) {
    const double w = weights.weight(i);
    sum += w;
    sum_sq += w * w;
  }
  if (sum_sq == 0.0) {
    throw ValidationError("effective sample size undefined: all weights in group are zero");
  }
  return sum * sum / sum_sq;
}

BalanceTable balance_table(const Dataset& data, const WeightVector& weights,
                           const Eigen::VectorXd& target_profile) {
  if (target_profile.size() != data.p()) {
    throw ValidationError("target profile length does not match covariate count");
  }
  BalanceTable table;
  table.nominal_treated = data.n_treated();
  table.nominal_control = data.n_control();
  table.ess_treated = effective_sample_size(weights, Group::kTreated);
  table.ess_control = effective_sample_size(weights, Group::kControl);
  for (int i : data.treated_indices()) {
    if (weights.weight(i) < 0.0) table.ess_caveat_treated = true;
  }
  for (int i : data.control_indices()) {
    if (weights.weight(i) < 0.0) table.ess_caveat_control = true;
  }
  table.rows.reserve(static_cast<std::size_t>(data.p()));
  for (int j = 0; j < data.p(); ++j) {
    BalanceRow row;
    row.name = data.covariate_names()[static_cast<std::size_t>(j)];
    row.treated_weighted_mean =
        weighted_group_mean(data, weights, data.treated_indices(), j);
    row.control_weighted_mean =
        weighted_group_mean(data, weights, data.control_indices(), j);
    row.target_mean = target_profile(j);
    const double sd = data.pooled_sd(j);
    row.std_diff_treated =
        standardized_gap(row.treated_weighted_mean - row.target_mean, sd);
    row.std_diff_control =
        standardized_gap(row.control_weighted_mean - row.target_mean, sd);
    table.rows.push_back(std::move(row));
  }
  return table;
}

Eigen::VectorXd implied_target_profile(const Dataset& data,
                                       const WeightVector& uri) {
  if (uri.method() != WeightMethod::kUri) {
    throw ValidationError("implied target profile is defined for uri weights only");
  }
  Eigen::VectorXd treated(data.p());
  Eigen::VectorXd control(data.p());
  for (int j = 0; j < data.p(); ++j) {
    treated(j) = weighted_group_mean(data, uri, data.treated_indices(), j);
    control(j) = weighted_group_mean(data, uri, data.control_indices(), j);
  }
  // Both sides meet at the same profile by construction; average out the
  // last few ulps of factorization noise.
  return 0.5 * (treated + control);
}

NegativeWeightReport negative_weight_report(const Dataset& data,
                                            const WeightVector& weights) {
  struct Entry {
    double magnitude;
    std::string id;
  };
  std::vector<Entry> entries;
  double mass = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const double w = weights.weight(i);
    if (w < 0.0) {
      entries.push_back({-w, data.unit(i).id});
      mass += w;
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return a.id < b.id;
  });
  NegativeWeightReport report;
  report.count = static_cast<int>(entries.size());
  report.total_negative_mass = mass;
  for (auto& e : entries) report.ids.push_back(e.id);
  if (!entries.empty()) report.max_magnitude_id = entries.front().id;
  return report;
}

SampleBoundedness sample_boundedness_check(const Dataset& data,
                                           const WeightVector& weights,
                                           double estimate) {
  double min_t = std::numeric_limits<double>::infinity();
  double max_t = -std::numeric_limits<double>::infinity();
  for (int i : data.treated_indices()) {
    min_t = std::min(min_t, data.unit(i).outcome);
    max_t = std::max(max_t, data.unit(i).outcome);
  }
  double min_c = std::numeric_limits<double>::infinity();
  double max_c = -std::numeric_limits<double>::infinity();
  for (int i : data.control_indices()) {
    min_c = std::min(min_c, data.unit(i).outcome);
    max_c = std::max(max_c, data.unit(i).outcome);
  }
  SampleBoundedness result;
  result.interval_low = min_t - max_c;
  result.interval_high = max_t - min_c;
  result.outside =
      estimate < result.interval_low || estimate > result.interval_high;
  result.extrapolation_capable = weights.has_negative();
  return result;
}

}  // namespace attkit
