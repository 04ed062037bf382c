#include "attkit/implied_weights.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace attkit {

namespace {

// Given the pivoted QR of a full-column-rank X (n x k) and a coefficient-
// space vector e, returns c = X (X'X)^-1 e, the outcome-space representer
// of the linear functional beta_hat |-> e . beta_hat. Using the factors
// directly: c = Q R^-T P^T e.
Eigen::VectorXd functional_representer(
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr, int n,
    const Eigen::VectorXd& e) {
  const int k = static_cast<int>(e.size());
  Eigen::VectorXd pe = qr.colsPermutation().transpose() * e;
  Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k);
  Eigen::VectorXd u =
      R.triangularView<Eigen::Upper>().transpose().solve(pe);
  Eigen::MatrixXd thinQ =
      qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  return thinQ * u;
}

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> factorize_full_rank(
    const Eigen::MatrixXd& X, const char* what) {
  const int k = static_cast<int>(X.cols());
  if (X.rows() < X.cols())
    throw ValidationError(std::string(what) + ": fewer units than design columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < k) {
    std::vector<int> dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (int c = qr.rank(); c < k; ++c) dependent.push_back(perm(c));
    std::sort(dependent.begin(), dependent.end());
    throw RankDeficiencyError(std::string(what) + ": design is rank deficient",
                              dependent);
  }
  return qr;
}

void require_no_treatment_terms(const DesignSpec& spec, const char* what) {
  for (const Term& t : spec.terms())
    if (t.kind == Term::Kind::kTreatment || t.kind == Term::Kind::kInteraction)
      throw ValidationError(std::string(what) +
                            ": covariate_terms must not contain treatment or "
                            "interaction terms");
}

}  // namespace

WeightVector uri_weights(const Dataset& data, const DesignSpec& covariate_terms) {
  require_no_treatment_terms(covariate_terms, "uri_weights");

  // Assemble {intercept, covariates, treatment} in the caller's term order.
  std::vector<Term> terms = covariate_terms.terms();
  terms.push_back(Term::treatment());
  const DesignSpec spec{std::move(terms)};
  const Eigen::MatrixXd X = build_design_matrix(data, spec);

  auto qr = factorize_full_rank(X, "uri_weights");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(spec.k());
  e(spec.treatment_column()) = 1.0;
  const Eigen::VectorXd c = functional_representer(qr, data.n(), e);

  // tau_hat(y) = c . y = (1/n_t) sum_t (n_t c_i) y_i - (1/n_c) sum_c (-n_c c_i) y_i
  Eigen::VectorXd w(data.n());
  for (int i : data.treated_indices()) w(i) = c(i) * data.n_treated();
  for (int i : data.control_indices()) w(i) = -c(i) * data.n_control();
  return WeightVector::create(data, std::move(w), WeightMethod::kUri);
}

WeightVector uri_weights(const Dataset& data) {
  return uri_weights(data, DesignSpec::covariates_only(data.p()));
}

WeightVector mri_weights(const Dataset& data, const DesignSpec& covariate_terms) {
  require_no_treatment_terms(covariate_terms, "mri_weights");

  const Eigen::MatrixXd Xall = build_design_matrix(data, covariate_terms);
  const auto& control = data.control_indices();
  const int nc = data.n_control();
  const int k = covariate_terms.k();
  if (nc <= k - 1)
    throw ValidationError("mri_weights: control group smaller than the model");

  Eigen::MatrixXd Xc(nc, k);
  for (int r = 0; r < nc; ++r) Xc.row(r) = Xall.row(control[static_cast<size_t>(r)]);
  auto qr = factorize_full_rank(Xc, "mri_weights");

  // Mean treated design row; predicting there equals averaging control-model
  // predictions over the treated units.
  Eigen::VectorXd xbar_t = Eigen::VectorXd::Zero(k);
  for (int i : data.treated_indices()) xbar_t += Xall.row(i).transpose();
  xbar_t /= static_cast<double>(data.n_treated());

  const Eigen::VectorXd d = functional_representer(qr, nc, xbar_t);

  Eigen::VectorXd w = Eigen::VectorXd::Ones(data.n());
  for (int r = 0; r < nc; ++r) w(control[static_cast<size_t>(r)]) = d(r) * nc;
  return WeightVector::create(data, std::move(w), WeightMethod::kMri);
}

WeightVector mri_weights(const Dataset& data) {
  return mri_weights(data, DesignSpec::covariates_only(data.p()));
}

namespace {

// Minimum-variance weights for one group: solve
//   min ||w - 1||^2  s.t.  (1/n_g) X_g' w = target,  1'w = n_g
// via the KKT system with v = w - 1:  v = C^+ r (minimum-norm solution),
// feasible only when the residual vanishes.
Eigen::VectorXd minvar_group(const Eigen::MatrixXd& Xg,
                             const Eigen::VectorXd& target,
                             const std::vector<std::string>& names) {
  const int ng = static_cast<int>(Xg.rows());
  const int p = static_cast<int>(Xg.cols());

  Eigen::MatrixXd C(p + 1, ng);
  C.row(0).setOnes();
  C.bottomRows(p) = Xg.transpose();
  Eigen::VectorXd r(p + 1);
  r(0) = 0.0;
  r.tail(p) = static_cast<double>(ng) * target - Xg.colwise().sum().transpose();

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(C);
  cod.setThreshold(kRankTolerance);
  const Eigen::VectorXd v = cod.solve(r);

  const Eigen::VectorXd resid = C * v - r;
  double worst = 0.0;
  int worst_j = -1;
  for (int j = 0; j < p; ++j) {
    const double scale =
        static_cast<double>(ng) * std::max(1.0, std::abs(target(j)));
    const double rel = std::abs(resid(j + 1)) / scale;
    if (rel > worst) {
      worst = rel;
      worst_j = j;
    }
  }
  if (worst > 1e-8 || std::abs(resid(0)) > 1e-8 * ng)
    throw InfeasibleError(
        "exact balance is infeasible: target for covariate '" +
            (worst_j >= 0 ? names[static_cast<size_t>(worst_j)] : "?") +
            "' lies outside the affine hull of the group's covariates",
        worst_j);
  return Eigen::VectorXd::Ones(ng) + v;
}

}  // namespace

WeightVector minvar_exact_balance_weights(const Dataset& data,
                                          const Eigen::VectorXd& target_profile,
                                          BalanceGroup group) {
  if (target_profile.size() != data.p())
    throw ValidationError("target profile length does not match p");

  Eigen::VectorXd w = Eigen::VectorXd::Ones(data.n());
  const Eigen::VectorXd wc = minvar_group(
      data.covariates_control(), target_profile, data.covariate_names());
  const auto& control = data.control_indices();
  for (size_t r = 0; r < control.size(); ++r) w(control[r]) = wc(static_cast<int>(r));

  if (group == BalanceGroup::kBoth) {
    const Eigen::VectorXd wt = minvar_group(
        data.covariates_treated(), target_profile, data.covariate_names());
    const auto& treated = data.treated_indices();
    for (size_t r = 0; r < treated.size(); ++r) w(treated[r]) = wt(static_cast<int>(r));
  }
  return WeightVector::create(data, std::move(w),
                              group == BalanceGroup::kBoth ? WeightMethod::kUri
                                                           : WeightMethod::kMri);
}

double weight_variance(const WeightVector& weights, Group group) {
  return weights.group_variance(group);
}

}  // namespace attkit
