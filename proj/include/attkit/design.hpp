#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "attkit/dataset.hpp"

namespace attkit {

// One column of a regression design.
struct Term {
  enum class Kind { kIntercept, kCovariate, kTreatment, kInteraction };
  Kind kind = Kind::kIntercept;
  int covariate = -1;  // for kCovariate / kInteraction

  static Term intercept() { return {Kind::kIntercept, -1}; }
  static Term covariate_term(int j) { return {Kind::kCovariate, j}; }
  static Term treatment() { return {Kind::kTreatment, -1}; }
  static Term interaction(int j) { return {Kind::kInteraction, j}; }
};

// Ordered term list for a linear model. Exactly one intercept, at most one
// treatment term, interactions only alongside a treatment term. The
// optional centering profile (length p) shifts covariates inside
// interaction columns only.
class DesignSpec {
 public:
  DesignSpec(std::vector<Term> terms,
             std::optional<Eigen::VectorXd> centering = std::nullopt);

  // intercept + all covariates (outcome model without treatment).
  static DesignSpec covariates_only(int p);
  // intercept + all covariates + treatment (the single-model estimator).
  static DesignSpec with_treatment(int p);
  // intercept + covariates + treatment + treatment x (covariate - center).
  static DesignSpec interacted(int p, Eigen::VectorXd centering);

  const std::vector<Term>& terms() const { return terms_; }
  const std::optional<Eigen::VectorXd>& centering() const { return centering_; }
  int k() const { return static_cast<int>(terms_.size()); }
  bool has_treatment() const { return treatment_col_ >= 0; }
  // Column index of the treatment term, -1 if absent.
  int treatment_column() const { return treatment_col_; }

  // Largest covariate index referenced, -1 if none.
  int max_covariate() const;
  std::string column_name(int col,
                          const std::vector<std::string>& covariate_names) const;

 private:
  std::vector<Term> terms_;
  std::optional<Eigen::VectorXd> centering_;
  int treatment_col_ = -1;
};

// Columns ordered as spec.terms(). Throws RankDeficiencyError (listing the
// dependent columns selected last by the pivoted factorization) when the
// matrix does not have full column rank, and ValidationError on dimension
// mismatch.
Eigen::MatrixXd build_design_matrix(const Dataset& data, const DesignSpec& spec);

// Shared rank threshold: a pivot below 1e-10 x the largest declares rank
// deficiency.
inline constexpr double kRankTolerance = 1e-10;

// Numerical rank of any matrix under kRankTolerance.
int matrix_rank(const Eigen::MatrixXd& m);

}  // namespace attkit
