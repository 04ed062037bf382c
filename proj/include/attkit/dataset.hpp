#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "attkit/errors.hpp"

namespace attkit {

struct Unit {
  std::string id;
  bool treated = false;
  Eigen::VectorXd covariates;
  double outcome = 0.0;
};

// Immutable study sample: covariates X (n x p), binary treatment flag,
// outcome vector, unique unit ids. Validated once at construction; every
// downstream operation is a pure function of a const Dataset&.
class Dataset {
 public:
  // Throws ValidationError unless: >= 2 treated and >= 2 control units,
  // all covariate vectors share length p >= 1, ids are unique, and all
  // numeric entries are finite.
  static Dataset create(std::vector<Unit> units,
                        std::vector<std::string> covariate_names);

  int n() const { return static_cast<int>(units_.size()); }
  int p() const { return static_cast<int>(covariate_names_.size()); }
  int n_treated() const { return static_cast<int>(treated_idx_.size()); }
  int n_control() const { return static_cast<int>(control_idx_.size()); }

  const std::vector<Unit>& units() const { return units_; }
  const Unit& unit(int i) const { return units_[static_cast<size_t>(i)]; }
  const std::vector<std::string>& covariate_names() const {
    return covariate_names_;
  }
  const std::vector<int>& treated_indices() const { return treated_idx_; }
  const std::vector<int>& control_indices() const { return control_idx_; }

  // n x p covariate matrix in unit order.
  const Eigen::MatrixXd& covariates() const { return X_; }
  // Outcome vector in unit order.
  const Eigen::VectorXd& outcomes() const { return y_; }
  // Treatment indicator as 0/1 doubles, unit order.
  const Eigen::VectorXd& treatment() const { return z_; }

  // Rows of X restricted to one group, preserving unit order.
  Eigen::MatrixXd covariates_treated() const;
  Eigen::MatrixXd covariates_control() const;

  // Unweighted covariate means per group.
  Eigen::VectorXd treated_mean_profile() const;
  Eigen::VectorXd control_mean_profile() const;

  // Two-group pooled (unweighted) standard deviation of covariate j:
  // sqrt(((n_t-1) s_t^2 + (n_c-1) s_c^2) / (n_t + n_c - 2)). This is the
  // fixed scale used by standardized differences, SBW tolerances, and
  // normalized distances.
  double pooled_sd(int j) const;
  Eigen::VectorXd pooled_sds() const;

  // Pooled within-group covariance matrix of the covariates.
  Eigen::MatrixXd pooled_covariance() const;

 private:
  Dataset() = default;
  std::vector<Unit> units_;
  std::vector<std::string> covariate_names_;
  std::vector<int> treated_idx_;
  std::vector<int> control_idx_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Eigen::VectorXd z_;
};

}  // namespace attkit
