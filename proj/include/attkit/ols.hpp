#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>

#include "attkit/dataset.hpp"
#include "attkit/design.hpp"
#include "attkit/weight_vector.hpp"

namespace attkit {

struct OlsFit {
  Eigen::VectorXd coefficients;  // aligned with the design columns
  Eigen::VectorXd residuals;     // length n
};

// Least squares by column-pivoted Householder QR of the design itself (the
// normal equations are never formed). Throws RankDeficiencyError below full
// column rank and ValidationError when n < k or dimensions mismatch.
OlsFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome);

// Weighted covariate means per group under the group-sums-to-group-size
// convention: profile_g = (1/n_g) sum_{i in g} w_i x_i. Pass nullopt for
// uniform weights.
std::pair<Eigen::VectorXd, Eigen::VectorXd> group_means(
    const Dataset& data, const std::optional<WeightVector>& weights);

}  // namespace attkit
