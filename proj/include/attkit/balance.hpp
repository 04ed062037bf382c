#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "attkit/dataset.hpp"
#include "attkit/weight_vector.hpp"

namespace attkit {

struct BalanceRow {
  std::string name;
  double treated_weighted_mean = 0.0;
  double control_weighted_mean = 0.0;
  double target_mean = 0.0;
  // Weighted group mean minus target over the pooled unweighted sd. An
  // infinite value flags a zero denominator with a nonzero gap.
  double std_diff_treated = 0.0;
  double std_diff_control = 0.0;
};

// The diagnostic dashboard: weighted means against the target profile,
// effective vs nominal sample sizes.
struct BalanceTable {
  std::vector<BalanceRow> rows;
  double ess_treated = 0.0;
  double ess_control = 0.0;
  int nominal_treated = 0;
  int nominal_control = 0;
  // ESS loses its equal-count reading when a group holds negative weights.
  bool ess_caveat_treated = false;
  bool ess_caveat_control = false;
};

// Census of negative weights. Sorted by magnitude, largest first.
struct NegativeWeightReport {
  int count = 0;
  std::vector<std::string> ids;       // magnitude descending
  double total_negative_mass = 0.0;   // sum of negative weights (<= 0)
  std::string max_magnitude_id;       // empty when count == 0
};

struct SampleBoundedness {
  // Range of observed pairwise treated-minus-control outcome differences.
  double interval_low = 0.0;
  double interval_high = 0.0;
  bool outside = false;               // estimate falls outside the interval
  bool extrapolation_capable = false; // weights carry negative entries
};

// Kish effective sample size (sum w)^2 / (sum w^2) within a group.
// Throws ValidationError when the group's weights are all zero.
double effective_sample_size(const WeightVector& weights, Group group);

BalanceTable balance_table(const Dataset& data, const WeightVector& weights,
                           const Eigen::VectorXd& target_profile);

// The covariate profile both groups are balanced at under the single-model
// implied weights: the common weighted mean the estimator hides behind.
// Requires weights.method() == kUri.
Eigen::VectorXd implied_target_profile(const Dataset& data,
                                       const WeightVector& uri);

NegativeWeightReport negative_weight_report(const Dataset& data,
                                            const WeightVector& weights);

SampleBoundedness sample_boundedness_check(const Dataset& data,
                                           const WeightVector& weights,
                                           double estimate);

}  // namespace attkit
