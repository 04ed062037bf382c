#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "attkit/dataset.hpp"
#include "attkit/weight_vector.hpp"

namespace attkit {

enum class DistanceMetric { kMahalanobis, kNormalizedEuclidean };

const char* to_string(DistanceMetric m);
DistanceMetric distance_metric_from_string(const std::string& s);

struct DistanceMatrix {
  // entries(r, c): distance between the r-th treated unit and the c-th
  // control unit, both in dataset order.
  Eigen::MatrixXd entries;
  DistanceMetric metric = DistanceMetric::kMahalanobis;
  // Mahalanobis was requested but the pooled covariance is singular, so the
  // normalized-Euclidean fallback was used instead.
  bool fell_back = false;
};

struct MatchedPair {
  int treated;   // dataset index
  int control;   // dataset index
  double distance;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;      // empty for profile matching
  std::vector<int> selected_controls;  // dataset indices, ascending
  double total_distance = 0.0;
  WeightVector weights;
};

struct ProfileMatchConfig {
  // Interpret the tolerance in raw covariate units instead of pooled-sd
  // units (handy for hand-checkable fixtures).
  bool absolute = false;
  // Guard rails for the exact search.
  int max_controls = 500;
  double time_budget_seconds = 10.0;
};

// Computes the treated-by-control distance matrix. A singular pooled
// covariance downgrades Mahalanobis to normalized Euclidean (flagged on the
// result) unless allow_fallback is false, in which case it throws.
DistanceMatrix distance_matrix(const Dataset& data,
                               DistanceMetric metric = DistanceMetric::kMahalanobis,
                               bool allow_fallback = true);

// Optimal 1:1 matching without replacement of every treated unit to a
// distinct control, minimizing the total distance (successive shortest
// augmenting paths with node potentials). Requires n_t <= n_c. Ties are
// resolved deterministically by unit id. Matched controls carry weight
// n_c / n_t, unmatched controls zero, treated units one.
MatchResult optimal_pair_match(const Dataset& data, const DistanceMatrix& dist);
MatchResult optimal_pair_match(const Dataset& data,
                               DistanceMetric metric = DistanceMetric::kMahalanobis);

// Largest control subset whose raw mean profile lands within
// target_profile +- tolerance_j * pooled sd (raw units in absolute mode),
// found by exact branch and bound over cardinalities scanned from n_c
// downward with sorted-greedy feasibility bounds. A single tolerance entry
// is broadcast across covariates. Selected controls carry weight n_c / |S|.
// Throws InfeasibleError when even a single control cannot meet the window
// and ConvergenceError when the search exhausts its time budget.
MatchResult profile_match(const Dataset& data,
                          const Eigen::VectorXd& target_profile,
                          const Eigen::VectorXd& tolerance,
                          const ProfileMatchConfig& config = {});

}  // namespace attkit
