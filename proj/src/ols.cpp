#include "attkit/ols.hpp"

#include <algorithm>
#include <string>

namespace attkit {

OlsFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome) {
  const int n = static_cast<int>(design.rows());
  const int k = static_cast<int>(design.cols());
  if (outcome.size() != n)
    throw ValidationError("outcome length " + std::to_string(outcome.size()) +
                          " does not match design rows " + std::to_string(n));
  if (n < k)
    throw ValidationError("fewer rows than design columns (" +
                          std::to_string(n) + " < " + std::to_string(k) + ")");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < k) {
    std::vector<int> dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (int c = qr.rank(); c < k; ++c) dependent.push_back(perm(c));
    std::sort(dependent.begin(), dependent.end());
    throw RankDeficiencyError("ols_fit: design matrix is rank deficient",
                              dependent);
  }

  OlsFit fit;
  fit.coefficients = qr.solve(outcome);
  fit.residuals = outcome - design * fit.coefficients;
  return fit;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> group_means(
    const Dataset& data, const std::optional<WeightVector>& weights) {
  if (weights && weights->size() != data.n())
    throw ValidationError("group_means: weights do not conform to dataset");

  auto profile = [&](const std::vector<int>& idx) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(data.p());
    for (int i : idx) {
      const double w = weights ? weights->weight(i) : 1.0;
      m += w * data.covariates().row(i).transpose();
    }
    return Eigen::VectorXd(m / static_cast<double>(idx.size()));
  };
  return {profile(data.treated_indices()), profile(data.control_indices())};
}

}  // namespace attkit
