#include "attkit/weight_vector.hpp"

#include <cmath>

namespace attkit {

const char* to_string(WeightMethod m) {
  switch (m) {
    case WeightMethod::kUri: return "uri";
    case WeightMethod::kMri: return "mri";
    case WeightMethod::kIpw: return "ipw";
    case WeightMethod::kSbw: return "sbw";
    case WeightMethod::kPairMatch: return "pair";
    case WeightMethod::kProfileMatch: return "profile";
    case WeightMethod::kUniform: return "uniform";
  }
  return "unknown";
}

WeightMethod weight_method_from_string(const std::string& s) {
  if (s == "uri") return WeightMethod::kUri;
  if (s == "mri") return WeightMethod::kMri;
  if (s == "ipw") return WeightMethod::kIpw;
  if (s == "sbw") return WeightMethod::kSbw;
  if (s == "pair") return WeightMethod::kPairMatch;
  if (s == "profile") return WeightMethod::kProfileMatch;
  if (s == "uniform") return WeightMethod::kUniform;
  throw ValidationError("unknown weight method '" + s + "'");
}

bool method_is_nonnegative(WeightMethod m) {
  return m != WeightMethod::kUri && m != WeightMethod::kMri;
}

WeightVector WeightVector::create(const Dataset& data, Eigen::VectorXd weights,
                                  WeightMethod method, double norm_tol) {
  if (weights.size() != data.n())
    throw ValidationError("weight vector length " +
                          std::to_string(weights.size()) +
                          " does not match dataset size " +
                          std::to_string(data.n()));
  if (!weights.allFinite())
    throw ValidationError("weight vector contains non-finite entries");

  WeightVector wv;
  wv.w_ = std::move(weights);
  wv.method_ = method;
  wv.treated_idx_ = data.treated_indices();
  wv.control_idx_ = data.control_indices();

  for (Group g : {Group::kTreated, Group::kControl}) {
    const auto& idx = wv.group_indices(g);
    const double expect = static_cast<double>(idx.size());
    if (std::abs(wv.group_sum(g) - expect) > norm_tol * expect)
      throw ValidationError(std::string("weights in the ") +
                            (g == Group::kTreated ? "treated" : "control") +
                            " group do not sum to the group size");
  }
  if (method_is_nonnegative(method) && wv.has_negative())
    throw ValidationError(std::string("method ") + to_string(method) +
                          " produced a negative weight");
  return wv;
}

WeightVector WeightVector::uniform(const Dataset& data) {
  return create(data, Eigen::VectorXd::Ones(data.n()), WeightMethod::kUniform);
}

double WeightVector::group_sum(Group g) const {
  double s = 0.0;
  for (int i : group_indices(g)) s += w_(i);
  return s;
}

double WeightVector::group_variance(Group g) const {
  const auto& idx = group_indices(g);
  const double mean = group_sum(g) / static_cast<double>(idx.size());
  double ss = 0.0;
  for (int i : idx) {
    const double d = w_(i) - mean;
    ss += d * d;
  }
  return ss / static_cast<double>(idx.size());
}

double WeightVector::pooled_variance() const {
  const double mean = w_.mean();
  return (w_.array() - mean).square().sum() / static_cast<double>(w_.size());
}

}  // namespace attkit
