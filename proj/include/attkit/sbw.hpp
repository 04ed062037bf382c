#pragma once

#include <Eigen/Dense>

#include "attkit/dataset.hpp"
#include "attkit/weight_vector.hpp"

namespace attkit {

struct SbwConfig {
  // Half-width of the balance window per covariate, in pooled-sd units.
  // Empty means 0.02 for every covariate; a single entry is broadcast.
  // +infinity in a slot drops that covariate's balance constraint.
  Eigen::VectorXd delta;
  int max_iterations = 10000;
  // Acceptable worst-case KKT residual after the active-set polish.
  double tolerance = 1e-6;
};

struct SbwResult {
  WeightVector weights;
  double objective = 0.0;      // control-group variance of the weights
  double kkt_residual = 0.0;
  int iterations = 0;
  // Signed weighted-control-mean minus target gap, in pooled-sd units.
  Eigen::VectorXd standardized_imbalance;
};

// Stable balancing weights for the ATT: minimum-variance nonnegative
// control weights with the control weighted mean pinned inside
// target +- delta_j * pooled sd, covariate by covariate. Treated
// weights are one. Dual cyclic coordinate ascent with exact piecewise
// linear root finds, then an active-set polish for machine-accurate KKT
// conditions. Throws InfeasibleError (with bisected per-covariate
// minimal deltas) when no nonnegative weights satisfy the window.
SbwResult sbw_solve(const Dataset& data, const Eigen::VectorXd& target_profile,
                    const SbwConfig& config = {});

}  // namespace attkit
