#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "attkit/balance.hpp"
#include "attkit/dataset.hpp"
#include "attkit/estimate.hpp"
#include "attkit/matching.hpp"
#include "attkit/weight_vector.hpp"

namespace attkit {

struct PipelineOptions {
  WeightMethod method = WeightMethod::kUri;
  // SBW balance window half-width, pooled-sd units (applied per covariate).
  double delta = 0.02;
  // Profile-match window half-width, pooled-sd units.
  double tolerance = 0.1;
  DistanceMetric metric = DistanceMetric::kMahalanobis;
};

// Everything one adjustment method produces for a dataset: the weights, the
// weighted contrast, and the diagnostics that say whether to trust it.
struct MethodResult {
  WeightVector weights;
  Estimate estimate;
  BalanceTable balance;
  Eigen::VectorXd target_profile;
  NegativeWeightReport negatives;
  SampleBoundedness boundedness;
};

MethodResult run_method(const Dataset& data, const PipelineOptions& options);

// One result per requested method, in the given order.
std::vector<MethodResult> run_methods(const Dataset& data,
                                      const std::vector<WeightMethod>& methods,
                                      const PipelineOptions& base_options);

}  // namespace attkit
