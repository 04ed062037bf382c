#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "attkit/dataset.hpp"

namespace attkit {

enum class WeightMethod {
  kUri,
  kMri,
  kIpw,
  kSbw,
  kPairMatch,
  kProfileMatch,
  kUniform,
};

const char* to_string(WeightMethod m);
WeightMethod weight_method_from_string(const std::string& s);

// True when the method guarantees non-negative weights by construction.
// URI and MRI weights may carry negative entries.
bool method_is_nonnegative(WeightMethod m);

enum class Group { kTreated, kControl };

// Per-unit weights aligned with a Dataset, normalized so that each group's
// weights sum to its group size (mean weight 1 per group). The estimand
// tag is always the ATT.
class WeightVector {
 public:
  // Validates alignment, finiteness, the group-sum convention (within
  // `norm_tol`), and non-negativity for the methods that promise it.
  static WeightVector create(const Dataset& data, Eigen::VectorXd weights,
                             WeightMethod method, double norm_tol = 1e-6);

  // All weights equal to 1.
  static WeightVector uniform(const Dataset& data);

  const Eigen::VectorXd& weights() const { return w_; }
  double weight(int i) const { return w_(i); }
  WeightMethod method() const { return method_; }
  int size() const { return static_cast<int>(w_.size()); }

  // Copied from the dataset at creation so group reductions do not need
  // the dataset again.
  const std::vector<int>& group_indices(Group g) const {
    return g == Group::kTreated ? treated_idx_ : control_idx_;
  }

  double group_sum(Group g) const;
  // Within-group sample variance with divisor n_g.
  double group_variance(Group g) const;
  // Pooled variance about the pooled mean weight, divisor n.
  double pooled_variance() const;

  bool has_negative() const { return (w_.array() < 0.0).any(); }

 private:
  WeightVector() = default;
  Eigen::VectorXd w_;
  WeightMethod method_ = WeightMethod::kUniform;
  std::vector<int> treated_idx_;
  std::vector<int> control_idx_;
};

}  // namespace attkit
