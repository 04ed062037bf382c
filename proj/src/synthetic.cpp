#include "attkit/synthetic.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "attkit/errors.hpp"

namespace attkit {

namespace {

// splitmix64: tiny, portable, and well mixed; one instance per stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // (0, 1]: safe under log.
  double uniform_positive() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, one spare cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u = uniform_positive();
    const double v = uniform_positive();
    const double radius = std::sqrt(-2.0 * std::log(u));
    const double angle = 2.0 * M_PI * v;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fixed outcome surface. Curved mode adds a gentle global quadratic plus a
// sharp convex hinge well above the bulk of the income distribution, so a
// linear fit is fine on the common support and badly wrong at high incomes.
constexpr double kIntercept = 10.0;
constexpr double kIncomeSlope = 0.1;
constexpr double kVisitsSlope = 1.0;
constexpr double kIncomeQuad = 0.0015;
constexpr double kHinge = 0.004;
constexpr double kHingeKnot = 100.0;
constexpr double kNoiseSd = 2.0;

double baseline(const Eigen::VectorXd& x, OutcomeModel model) {
  double y = kIntercept + kIncomeSlope * x(0);
  if (x.size() > 1) y += kVisitsSlope * x(1);
  if (model == OutcomeModel::kCurved) {
    y += kIncomeQuad * x(0) * x(0);
    const double over = std::max(0.0, x(0) - kHingeKnot);
    y += kHinge * over * over;
  }
  return y;
}

Eigen::VectorXd draw_profile(SplitMix64& rng, const Eigen::VectorXd& means,
                             const Eigen::VectorXd& sds) {
  Eigen::VectorXd x(means.size());
  for (int j = 0; j < means.size(); ++j) {
    x(j) = means(j) + sds(j) * rng.normal();
  }
  // Income must stay strictly positive.
  while (x(0) <= 0.0) {
    x(0) = means(0) + sds(0) * rng.normal();
  }
  return x;
}

}  // namespace

Dataset generate_synthetic_example(const GeneratorConfig& config) {
  const int p = static_cast<int>(config.treated_mean_profile.size());
  if (p < 1 || config.control_mean_profile.size() != p ||
      config.covariate_sds.size() != p) {
    throw ValidationError("generator profiles and sds must share a positive length");
  }
  if ((config.covariate_sds.array() <= 0.0).any()) {
    throw ValidationError("generator covariate sds must be positive");
  }
  if (config.n_treated < 2 || config.n_control < 2) {
    throw ValidationError("generator needs at least 2 units per group");
  }
  if (config.outlier && config.outlier->profile.size() != p) {
    throw ValidationError("outlier profile length does not match");
  }

  SplitMix64 base(config.seed);
  SplitMix64 treated_stream(base.next());
  SplitMix64 control_stream(base.next());
  SplitMix64 noise_stream(base.next());

  std::vector<Unit> units;
  units.reserve(static_cast<std::size_t>(config.n_treated + config.n_control + 1));
  for (int i = 0; i < config.n_treated; ++i) {
    Unit unit;
    unit.id = "t" + std::to_string(i + 1);
    unit.treated = true;
    unit.covariates = draw_profile(treated_stream, config.treated_mean_profile,
                                   config.covariate_sds);
    units.push_back(std::move(unit));
  }
  for (int i = 0; i < config.n_control; ++i) {
    Unit unit;
    unit.id = "c" + std::to_string(i + 1);
    unit.treated = false;
    unit.covariates = draw_profile(control_stream, config.control_mean_profile,
                                   config.covariate_sds);
    units.push_back(std::move(unit));
  }
  if (config.outlier) {
    Unit unit;
    unit.id = "o1";
    unit.treated = config.outlier->treated;
    unit.covariates = config.outlier->profile;
    units.push_back(std::move(unit));
  }
  for (auto& unit : units) {
    unit.outcome = baseline(unit.covariates, config.outcome_model) +
                   (unit.treated ? config.true_att : 0.0) +
                   kNoiseSd * noise_stream.normal();
  }

  std::vector<std::string> names;
  names.emplace_back("income");
  if (p > 1) names.emplace_back("visits");
  for (int j = 2; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return Dataset::create(std::move(units), std::move(names));
}

}  // namespace attkit
