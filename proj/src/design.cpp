#include "attkit/design.hpp"

#include <algorithm>

namespace attkit {

DesignSpec::DesignSpec(std::vector<Term> terms,
                       std::optional<Eigen::VectorXd> centering)
    : terms_(std::move(terms)), centering_(std::move(centering)) {
  int intercepts = 0, treatments = 0, interactions = 0;
  for (size_t c = 0; c < terms_.size(); ++c) {
    const Term& t = terms_[c];
    switch (t.kind) {
      case Term::Kind::kIntercept: ++intercepts; break;
      case Term::Kind::kTreatment:
        ++treatments;
        treatment_col_ = static_cast<int>(c);
        break;
      case Term::Kind::kInteraction: ++interactions; break;
      case Term::Kind::kCovariate: break;
    }
    if ((t.kind == Term::Kind::kCovariate ||
         t.kind == Term::Kind::kInteraction) &&
        t.covariate < 0)
      throw ValidationError("term references a negative covariate index");
  }
  if (intercepts != 1)
    throw ValidationError("design spec needs exactly one intercept term");
  if (treatments > 1)
    throw ValidationError("design spec allows at most one treatment term");
  if (interactions > 0 && treatments == 0)
    throw ValidationError("interaction terms require a treatment term");
  if (centering_ && max_covariate() >= centering_->size())
    throw ValidationError("centering profile shorter than referenced covariates");
}

DesignSpec DesignSpec::covariates_only(int p) {
  std::vector<Term> t{Term::intercept()};
  for (int j = 0; j < p; ++j) t.push_back(Term::covariate_term(j));
  return DesignSpec(std::move(t));
}

DesignSpec DesignSpec::with_treatment(int p) {
  std::vector<Term> t{Term::intercept()};
  for (int j = 0; j < p; ++j) t.push_back(Term::covariate_term(j));
  t.push_back(Term::treatment());
  return DesignSpec(std::move(t));
}

DesignSpec DesignSpec::interacted(int p, Eigen::VectorXd centering) {
  std::vector<Term> t{Term::intercept()};
  for (int j = 0; j < p; ++j) t.push_back(Term::covariate_term(j));
  t.push_back(Term::treatment());
  for (int j = 0; j < p; ++j) t.push_back(Term::interaction(j));
  return DesignSpec(std::move(t), std::move(centering));
}

int DesignSpec::max_covariate() const {
  int mx = -1;
  for (const Term& t : terms_) mx = std::max(mx, t.covariate);
  return mx;
}

std::string DesignSpec::column_name(
    int col, const std::vector<std::string>& covariate_names) const {
  const Term& t = terms_[static_cast<size_t>(col)];
  switch (t.kind) {
    case Term::Kind::kIntercept: return "(intercept)";
    case Term::Kind::kTreatment: return "treatment";
    case Term::Kind::kCovariate:
      return covariate_names[static_cast<size_t>(t.covariate)];
    case Term::Kind::kInteraction:
      return "treatment:" + covariate_names[static_cast<size_t>(t.covariate)];
  }
  return "?";
}

Eigen::MatrixXd build_design_matrix(const Dataset& data,
                                    const DesignSpec& spec) {
  if (spec.max_covariate() >= data.p())
    throw ValidationError("design spec references covariate " +
                          std::to_string(spec.max_covariate()) +
                          " but dataset has p=" + std::to_string(data.p()));
  if (spec.centering() && spec.centering()->size() != data.p())
    throw ValidationError("centering profile length does not match p");

  const int n = data.n();
  const int k = spec.k();
  Eigen::MatrixXd X(n, k);
  for (int c = 0; c < k; ++c) {
    const Term& t = spec.terms()[static_cast<size_t>(c)];
    switch (t.kind) {
      case Term::Kind::kIntercept:
        X.col(c).setOnes();
        break;
      case Term::Kind::kCovariate:
        X.col(c) = data.covariates().col(t.covariate);
        break;
      case Term::Kind::kTreatment:
        X.col(c) = data.treatment();
        break;
      case Term::Kind::kInteraction: {
        Eigen::VectorXd x = data.covariates().col(t.covariate);
        if (spec.centering()) x.array() -= (*spec.centering())(t.covariate);
        X.col(c) = x.cwiseProduct(data.treatment());
        break;
      }
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < k) {
    // Pivot order selects an independent column set first; the remainder
    // are the dependent ones.
    std::vector<int> dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (int c = qr.rank(); c < k; ++c) dependent.push_back(perm(c));
    std::sort(dependent.begin(), dependent.end());
    std::string msg = "design matrix is rank deficient; dependent columns:";
    for (int c : dependent)
      msg += " " + spec.column_name(c, data.covariate_names());
    throw RankDeficiencyError(msg, dependent);
  }
  return X;
}

int matrix_rank(const Eigen::MatrixXd& m) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(kRankTolerance);
  return static_cast<int>(qr.rank());
}

}  // namespace attkit
