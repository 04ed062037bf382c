#pragma once

#include "attkit/dataset.hpp"
#include "attkit/weight_vector.hpp"

namespace attkit {

struct Estimate {
  double att = 0.0;
  WeightMethod method = WeightMethod::kUniform;
  // Units with nonzero weight in each group.
  int n_used_treated = 0;
  int n_used_control = 0;
  // Whether att lies inside the range of observed pairwise treated-minus-
  // control outcome differences.
  bool sample_bounded = true;
  // Weighted mean outcomes behind the contrast.
  double treated_mean = 0.0;
  double control_mean = 0.0;
};

// The ATT as a weighted contrast of outcome means:
//   (1/n_t) sum_t w_i y_i - (1/n_c) sum_c w_i y_i.
Estimate weighted_contrast(const Dataset& data, const WeightVector& weights);

// Coefficient on treatment in the additive regression of outcome on
// [1, X, z]. Numerically identical to the weighted contrast under the
// implied regression weights.
double regression_att(const Dataset& data);

}  // namespace attkit
