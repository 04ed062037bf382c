#include "attkit/pipeline.hpp"

#include "attkit/errors.hpp"
#include "attkit/implied_weights.hpp"
#include "attkit/propensity.hpp"
#include "attkit/sbw.hpp"

namespace attkit {

namespace {

WeightVector solve_weights(const Dataset& data, const PipelineOptions& options) {
  switch (options.method) {
    case WeightMethod::kUri:
      return uri_weights(data);
    case WeightMethod::kMri:
      return mri_weights(data);
    case WeightMethod::kIpw:
      return ipw_att_weights(fit_propensity_logistic(data), data);
    case WeightMethod::kSbw: {
      SbwConfig config;
      config.delta = Eigen::VectorXd::Constant(data.p(), options.delta);
      return sbw_solve(data, data.treated_mean_profile(), config).weights;
    }
    case WeightMethod::kPairMatch:
      return optimal_pair_match(data, options.metric).weights;
    case WeightMethod::kProfileMatch: {
      const Eigen::VectorXd tol =
          Eigen::VectorXd::Constant(data.p(), options.tolerance);
      return profile_match(data, data.treated_mean_profile(), tol).weights;
    }
    case WeightMethod::kUniform:
      return WeightVector::uniform(data);
  }
  throw ValidationError("unknown weighting method");
}

}  // namespace

MethodResult run_method(const Dataset& data, const PipelineOptions& options) {
  WeightVector weights = solve_weights(data, options);
  // The ATT target is always the treated mean profile. URI's weighted means
  // drifting away from it (toward the implied profile) is exactly what the
  // dashboard is meant to expose.
  const Eigen::VectorXd target = data.treated_mean_profile();
  const Estimate estimate = weighted_contrast(data, weights);
  BalanceTable balance = balance_table(data, weights, target);
  NegativeWeightReport negatives = negative_weight_report(data, weights);
  const SampleBoundedness boundedness =
      sample_boundedness_check(data, weights, estimate.att);
  return MethodResult{std::move(weights), estimate,     std::move(balance),
                      target,             std::move(negatives), boundedness};
}

std::vector<MethodResult> run_methods(const Dataset& data,
                                      const std::vector<WeightMethod>& methods,
                                      const PipelineOptions& base_options) {
  std::vector<MethodResult> results;
  results.reserve(methods.size());
  for (WeightMethod m : methods) {
    PipelineOptions options = base_options;
    options.method = m;
    results.push_back(run_method(data, options));
  }
  return results;
}

}  // namespace attkit
