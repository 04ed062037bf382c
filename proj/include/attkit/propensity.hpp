#pragma once

#include <Eigen/Dense>

#include "attkit/dataset.hpp"
#include "attkit/weight_vector.hpp"

namespace attkit {

struct PropensityFit {
  Eigen::VectorXd coefficients;  // intercept first, then covariate slopes
  Eigen::VectorXd scores;        // fitted P(Z=1 | x), one per unit
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Logistic regression of treatment on [1, X] by damped Newton. Throws
// RankDeficiencyError when [1, X] is column-rank deficient, SeparationError
// when the groups are linearly separable (the MLE runs off to infinity),
// and ConvergenceError when Newton stalls short of tolerance.
PropensityFit fit_propensity_logistic(const Dataset& data,
                                      int max_iterations = 50,
                                      double tolerance = 1e-8);

// ATT inverse-probability weights: treated units keep weight one, controls
// are weighted by the odds e/(1-e) and renormalized so the control weights
// sum to n_c (the Hajek form). Throws ValidationError when a control score
// sits at one within 1e-12.
WeightVector ipw_att_weights(const PropensityFit& fit, const Dataset& data);

}  // namespace attkit
