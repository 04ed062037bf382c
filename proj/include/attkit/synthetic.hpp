#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "attkit/dataset.hpp"

namespace attkit {

enum class OutcomeModel { kLinear, kCurved };

// A unit appended verbatim after the sampled ones.
struct OutlierSpec {
  Eigen::VectorXd profile;
  bool treated = false;
};

// Defaults replicate the running example: income (in $K) and hospital
// visits, treated (27.2, 4.6) vs control (45, 4.1), one control outlier at
// (264, 4). The control visits mean and the sds are free parameters of the
// example, not estimates of anything.
struct GeneratorConfig {
  int n_treated = 100;
  int n_control = 200;
  Eigen::VectorXd treated_mean_profile = (Eigen::VectorXd(2) << 27.2, 4.6).finished();
  Eigen::VectorXd control_mean_profile = (Eigen::VectorXd(2) << 45.0, 4.1).finished();
  Eigen::VectorXd covariate_sds = (Eigen::VectorXd(2) << 8.0, 1.5).finished();
  std::optional<OutlierSpec> outlier =
      OutlierSpec{(Eigen::VectorXd(2) << 264.0, 4.0).finished(), false};
  double true_att = -5.0;
  OutcomeModel outcome_model = OutcomeModel::kCurved;
  std::uint64_t seed = 1;
};

// Deterministic synthetic dataset. RNG is splitmix64 with Box-Muller
// normals; the seed spawns one independent stream per group plus one for
// outcome noise, so resizing one group never disturbs the other's draws.
// The first covariate (income) is redrawn until strictly positive. The
// outcome is a fixed baseline in the covariates — curved mode adds a convex
// income term, so any linear model is misspecified — plus true_att for
// treated units and unit-variance-scaled noise.
Dataset generate_synthetic_example(const GeneratorConfig& config);

}  // namespace attkit
