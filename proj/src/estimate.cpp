#include "attkit/estimate.hpp"

#include "attkit/balance.hpp"
#include "attkit/design.hpp"
#include "attkit/errors.hpp"
#include "attkit/ols.hpp"

namespace attkit {

Estimate weighted_contrast(const Dataset& data, const WeightVector& weights) {
  if (weights.size() != data.n()) {
    throw ValidationError("weight vector does not match the dataset");
  }
  Estimate estimate;
  estimate.method = weights.method();
  double treated = 0.0;
  for (int i : data.treated_indices()) {
    const double w = weights.weight(i);
    treated += w * data.unit(i).outcome;
    if (w != 0.0) ++estimate.n_used_treated;
  }
  treated /= static_cast<double>(data.n_treated());
  double control = 0.0;
  for (int i : data.control_indices()) {
    const double w = weights.weight(i);
    control += w * data.unit(i).outcome;
    if (w != 0.0) ++estimate.n_used_control;
  }
  control /= static_cast<double>(data.n_control());
  estimate.treated_mean = treated;
  estimate.control_mean = control;
  estimate.att = treated - control;
  estimate.sample_bounded =
      !sample_boundedness_check(data, weights, estimate.att).outside;
  return estimate;
}

double regression_att(const Dataset& data) {
  const DesignSpec spec = DesignSpec::with_treatment(data.p());
  const Eigen::MatrixXd design = build_design_matrix(data, spec);
  const OlsFit fit = ols_fit(design, data.outcomes());
  return fit.coefficients(spec.treatment_column());
}

}  // namespace attkit
