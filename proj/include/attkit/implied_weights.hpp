#pragma once

#include <Eigen/Dense>

#include "attkit/dataset.hpp"
#include "attkit/design.hpp"
#include "attkit/weight_vector.hpp"

namespace attkit {

// Which group(s) a balance constraint set applies to.
enum class BalanceGroup { kControl, kBoth };

// Implied weights of the single-model estimator (outcome on intercept,
// covariates, treatment). The estimator's treatment coefficient is a linear
// functional of the outcome; the weights are read off that functional, so
// for every outcome vector the weighted contrast reproduces the fitted
// coefficient up to solve tolerance. Both groups may carry weights != 1 and
// entries may be negative.
//
// `covariate_terms` must contain no treatment or interaction terms; it
// names the covariates entering the model.
WeightVector uri_weights(const Dataset& data, const DesignSpec& covariate_terms);
WeightVector uri_weights(const Dataset& data);  // all covariates

// Implied weights of the two-model (interacted) estimator of the ATT: fit
// the outcome model on controls only, predict each treated unit's untreated
// outcome, contrast observed treated mean with mean prediction. Treated
// weights are identically 1; control weights reproduce the mean prediction
// as a weighted mean for every outcome vector.
WeightVector mri_weights(const Dataset& data, const DesignSpec& covariate_terms);
WeightVector mri_weights(const Dataset& data);

// Unique weights minimizing the within-group variance subject to exact mean
// balance at `target_profile` and the group-sum normalization, by the KKT
// linear system of the equality-constrained quadratic program. Entries may
// be negative. With kControl the treated side keeps weight 1 and the result
// is tagged MRI; with kBoth each group is balanced at the target and the
// result is tagged URI (the families these certificates characterize).
//
// Throws InfeasibleError naming the violated covariate when the target lies
// outside the affine hull of a group's covariates (constraint residual
// above 1e-8 after the KKT solve).
WeightVector minvar_exact_balance_weights(const Dataset& data,
                                          const Eigen::VectorXd& target_profile,
                                          BalanceGroup group);

// Within-group sample variance of the weights (divisor n_g).
double weight_variance(const WeightVector& weights, Group group);

}  // namespace attkit
