#include "attkit/dataset.hpp"

#include <cmath>
#include <unordered_set>

namespace attkit {

Dataset Dataset::create(std::vector<Unit> units,
                        std::vector<std::string> covariate_names) {
  const int p = static_cast<int>(covariate_names.size());
  if (p < 1) throw ValidationError("dataset needs at least 1 covariate");
  if (units.size() < 4)
    throw ValidationError("dataset needs at least 2 treated and 2 control units");

  Dataset d;
  d.covariate_names_ = std::move(covariate_names);
  d.units_ = std::move(units);

  const int n = static_cast<int>(d.units_.size());
  d.X_.resize(n, p);
  d.y_.resize(n);
  d.z_.resize(n);

  std::unordered_set<std::string> seen;
  seen.reserve(d.units_.size());
  for (int i = 0; i < n; ++i) {
    const Unit& u = d.units_[static_cast<size_t>(i)];
    if (u.covariates.size() != p)
      throw ValidationError("unit '" + u.id + "' has " +
                            std::to_string(u.covariates.size()) +
                            " covariates, expected " + std::to_string(p));
    if (!seen.insert(u.id).second)
      throw ValidationError("duplicate unit id '" + u.id + "'");
    if (!u.covariates.allFinite() || !std::isfinite(u.outcome))
      throw ValidationError("non-finite value in unit '" + u.id + "'");
    d.X_.row(i) = u.covariates.transpose();
    d.y_(i) = u.outcome;
    d.z_(i) = u.treated ? 1.0 : 0.0;
    (u.treated ? d.treated_idx_ : d.control_idx_).push_back(i);
  }
  if (d.treated_idx_.size() < 2 || d.control_idx_.size() < 2)
    throw ValidationError("dataset needs at least 2 treated and 2 control units, got " +
                          std::to_string(d.treated_idx_.size()) + " treated / " +
                          std::to_string(d.control_idx_.size()) + " control");
  return d;
}

namespace {
Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X,
                            const std::vector<int>& rows) {
  Eigen::MatrixXd out(rows.size(), X.cols());
  for (size_t r = 0; r < rows.size(); ++r) out.row(r) = X.row(rows[r]);
  return out;
}
}  // namespace

Eigen::MatrixXd Dataset::covariates_treated() const {
  return select_rows(X_, treated_idx_);
}

Eigen::MatrixXd Dataset::covariates_control() const {
  return select_rows(X_, control_idx_);
}

Eigen::VectorXd Dataset::treated_mean_profile() const {
  return covariates_treated().colwise().mean();
}

Eigen::VectorXd Dataset::control_mean_profile() const {
  return covariates_control().colwise().mean();
}

double Dataset::pooled_sd(int j) const {
  auto group_ss = [&](const std::vector<int>& idx) {
    double mean = 0.0;
    for (int i : idx) mean += X_(i, j);
    mean /= static_cast<double>(idx.size());
    double ss = 0.0;
    for (int i : idx) {
      const double dxi = X_(i, j) - mean;
      ss += dxi * dxi;
    }
    return ss;
  };
  const double ss = group_ss(treated_idx_) + group_ss(control_idx_);
  return std::sqrt(ss / static_cast<double>(n() - 2));
}

Eigen::VectorXd Dataset::pooled_sds() const {
  Eigen::VectorXd out(p());
  for (int j = 0; j < p(); ++j) out(j) = pooled_sd(j);
  return out;
}

Eigen::MatrixXd Dataset::pooled_covariance() const {
  auto centered_gram = [&](const std::vector<int>& idx) {
    Eigen::MatrixXd G = select_rows(X_, idx);
    G.rowwise() -= G.colwise().mean();
    return Eigen::MatrixXd(G.transpose() * G);
  };
  return (centered_gram(treated_idx_) + centered_gram(control_idx_)) /
         static_cast<double>(n() - 2);
}

}  // namespace attkit
