#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "attkit/errors.hpp"
#include "attkit/matching.hpp"
#include "attkit/synthetic.hpp"
#include "oracles.hpp"

using namespace attkit;
using oracles::unit;

namespace {

Dataset one_covariate(const std::vector<double>& x_treated,
                      const std::vector<double>& x_control) {
  std::vector<Unit> units;
  int i = 0;
  for (double x : x_treated) {
    units.push_back(unit("t" + std::to_string(++i), true, {x}, 0.0));
  }
  i = 0;
  for (double x : x_control) {
    units.push_back(unit("c" + std::to_string(++i), false, {x}, 0.0));
  }
  return Dataset::create(std::move(units), oracles::default_names(1));
}

// Pooled within-group covariance computed from scratch.
Eigen::MatrixXd pooled_covariance_oracle(const Dataset& data) {
  const auto scatter = [&](const std::vector<int>& idx) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(data.p());
    for (int i : idx) mean += data.covariates().row(i).transpose();
    mean /= static_cast<double>(idx.size());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(data.p(), data.p());
    for (int i : idx) {
      const Eigen::VectorXd d = data.covariates().row(i).transpose() - mean;
      s += d * d.transpose();
    }
    return s;
  };
  return (scatter(data.treated_indices()) + scatter(data.control_indices())) /
         static_cast<double>(data.n() - 2);
}

}  // namespace

TEST_CASE("distance is zero for identical covariate rows") {
  std::vector<Unit> units = {unit("t1", true, {1.0, 2.0}, 0),
                             unit("t2", true, {3.0, 1.0}, 0),
                             unit("c1", false, {1.0, 2.0}, 0),
                             unit("c2", false, {2.0, 4.0}, 0)};
  const Dataset data = oracles::make_dataset(units);
  const DistanceMatrix dist = distance_matrix(data);
  CHECK(!dist.fell_back);
  CHECK(dist.entries(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(dist.entries(0, 1) > 0.0);
}

TEST_CASE("one-covariate mahalanobis is the standardized gap") {
  const Dataset data = one_covariate({1.0, 3.0}, {2.0, 5.0});
  const double sd = data.pooled_sd(0);
  const DistanceMatrix dist = distance_matrix(data);
  CHECK(dist.entries(0, 0) == doctest::Approx(1.0 / sd));
  CHECK(dist.entries(0, 1) == doctest::Approx(4.0 / sd));
  CHECK(dist.entries(1, 0) == doctest::Approx(1.0 / sd));
  CHECK(dist.entries(1, 1) == doctest::Approx(2.0 / sd));

  const DistanceMatrix ne =
      distance_matrix(data, DistanceMetric::kNormalizedEuclidean);
  CHECK((ne.entries - dist.entries).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("mahalanobis matches the explicit quadratic form") {
  std::mt19937_64 rng(101);
  const Dataset data = oracles::random_dataset(rng, 3, 5, 2);
  const Eigen::MatrixXd sigma = pooled_covariance_oracle(data);
  // Explicit 2x2 inverse by adjugate.
  const double det = sigma(0, 0) * sigma(1, 1) - sigma(0, 1) * sigma(1, 0);
  REQUIRE(std::abs(det) > 1e-12);
  Eigen::Matrix2d inv;
  inv << sigma(1, 1), -sigma(0, 1), -sigma(1, 0), sigma(0, 0);
  inv /= det;

  const DistanceMatrix dist = distance_matrix(data);
  const auto& treated = data.treated_indices();
  const auto& control = data.control_indices();
  for (std::size_t r = 0; r < treated.size(); ++r) {
    for (std::size_t c = 0; c < control.size(); ++c) {
      const Eigen::Vector2d diff =
          (data.covariates().row(treated[r]) -
           data.covariates().row(control[c]))
              .transpose();
      const double expected = std::sqrt(diff.dot(inv * diff));
      CHECK(dist.entries(static_cast<int>(r), static_cast<int>(c)) ==
            doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("singular covariance falls back or throws on request") {
  // Second covariate duplicates the first: pooled covariance is singular.
  std::vector<Unit> units = {unit("t1", true, {1.0, 1.0}, 0),
                             unit("t2", true, {2.0, 2.0}, 0),
                             unit("c1", false, {0.0, 0.0}, 0),
                             unit("c2", false, {3.0, 3.0}, 0)};
  const Dataset data = oracles::make_dataset(units);

  const DistanceMatrix dist = distance_matrix(data);
  CHECK(dist.fell_back);
  CHECK(dist.metric == DistanceMetric::kNormalizedEuclidean);
  const double sd = data.pooled_sd(0);
  CHECK(dist.entries(0, 0) ==
        doctest::Approx(std::sqrt(2.0) * 1.0 / sd).epsilon(1e-10));

  CHECK_THROWS_AS(distance_matrix(data, DistanceMetric::kMahalanobis, false),
                  ValidationError);
}

TEST_CASE("distance metric names round-trip") {
  CHECK(distance_metric_from_string(to_string(DistanceMetric::kMahalanobis)) ==
        DistanceMetric::kMahalanobis);
  CHECK(distance_metric_from_string(to_string(
            DistanceMetric::kNormalizedEuclidean)) ==
        DistanceMetric::kNormalizedEuclidean);
  CHECK_THROWS_AS(distance_metric_from_string("taxicab"), ValidationError);
}

TEST_CASE("pair matching picks the diagonal on a crossed fixture") {
  const Dataset data = one_covariate({0.0, 3.0}, {1.0, 2.0});
  const DistanceMatrix dist = distance_matrix(data);
  const MatchResult match = optimal_pair_match(data, dist);

  REQUIRE(match.pairs.size() == 2);
  CHECK(data.unit(match.pairs[0].treated).id == "t1");
  CHECK(data.unit(match.pairs[0].control).id == "c1");
  CHECK(data.unit(match.pairs[1].treated).id == "t2");
  CHECK(data.unit(match.pairs[1].control).id == "c2");
  CHECK(match.total_distance ==
        doctest::Approx(dist.entries(0, 0) + dist.entries(1, 1)));
  // Both controls matched: weight n_c / n_t = 1 each.
  for (int i = 0; i < data.n(); ++i) {
    CHECK(match.weights.weight(i) == doctest::Approx(1.0));
  }
  CHECK(match.selected_controls == std::vector<int>{2, 3});

  const MatchResult via_metric = optimal_pair_match(data);
  CHECK(via_metric.total_distance == doctest::Approx(match.total_distance));
}

TEST_CASE("a single treated unit matches its nearest control") {
  // Two treated to satisfy the dataset invariant; give the second an exact
  // twin so the interesting row is t1.
  std::vector<Unit> units = {unit("t1", true, {0.0}, 0),
                             unit("t2", true, {9.0}, 0),
                             unit("c1", false, {4.0}, 0),
                             unit("c2", false, {0.5}, 0),
                             unit("c3", false, {9.0}, 0)};
  const Dataset data = oracles::make_dataset(units);
  const MatchResult match = optimal_pair_match(data);
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& pr : match.pairs) {
    got.emplace(data.unit(pr.treated).id, data.unit(pr.control).id);
  }
  CHECK(got.count({"t1", "c2"}) == 1);
  CHECK(got.count({"t2", "c3"}) == 1);
  // Matched controls carry n_c / n_t = 1.5, the skipped one zero.
  CHECK(match.weights.weight(3) == doctest::Approx(1.5));
  CHECK(match.weights.weight(4) == doctest::Approx(1.5));
  CHECK(match.weights.weight(2) == 0.0);
}

TEST_CASE("pair matching reproduces brute-force optima") {
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<int> size_t_dist(1, 5);
  std::uniform_int_distribution<int> size_c_dist(0, 2);
  for (int rep = 0; rep < 25; ++rep) {
    const int n_t = std::max(2, size_t_dist(rng));
    const int n_c = n_t + size_c_dist(rng);
    const Dataset data = oracles::random_dataset(rng, n_t, n_c, 2);
    const DistanceMatrix dist = distance_matrix(data);
    const MatchResult match = optimal_pair_match(data, dist);

    REQUIRE(static_cast<int>(match.pairs.size()) == n_t);
    std::set<int> used_t, used_c;
    double total = 0.0;
    for (const auto& pr : match.pairs) {
      CHECK(data.unit(pr.treated).treated);
      CHECK(!data.unit(pr.control).treated);
      used_t.insert(pr.treated);
      used_c.insert(pr.control);
      total += pr.distance;
    }
    CHECK(static_cast<int>(used_t.size()) == n_t);  // each treated once
    CHECK(static_cast<int>(used_c.size()) == n_t);  // controls disjoint
    CHECK(match.total_distance == doctest::Approx(total).epsilon(1e-10));
    CHECK(match.total_distance ==
          doctest::Approx(oracles::brute_force_assignment(dist.entries))
              .epsilon(1e-10));
    for (int ci : match.selected_controls) {
      CHECK(match.weights.weight(ci) ==
            doctest::Approx(static_cast<double>(n_c) / n_t));
    }
  }
}

TEST_CASE("pair matching is invariant to row order") {
  std::mt19937_64 rng(107);
  const Dataset data = oracles::random_dataset(rng, 4, 6, 2);
  std::vector<Unit> shuffled = data.units();
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const Dataset permuted =
      Dataset::create(shuffled, data.covariate_names());

  const auto id_pairs = [](const Dataset& d, const MatchResult& m) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& pr : m.pairs) {
      out.emplace(d.unit(pr.treated).id, d.unit(pr.control).id);
    }
    return out;
  };
  CHECK(id_pairs(data, optimal_pair_match(data)) ==
        id_pairs(permuted, optimal_pair_match(permuted)));
}

TEST_CASE("pair matching requires enough controls") {
  const Dataset data = one_covariate({0.0, 1.0, 2.0}, {0.5, 1.5});
  CHECK_THROWS_AS(optimal_pair_match(data), ValidationError);

  const Dataset other = one_covariate({0.0, 1.0}, {0.5, 1.5, 2.5});
  const DistanceMatrix wrong = distance_matrix(other);
  const Dataset ok = one_covariate({0.0, 1.0}, {0.5, 1.5});
  CHECK_THROWS_AS(optimal_pair_match(ok, wrong), ValidationError);
}

TEST_CASE("profile matching keeps the largest window-respecting subset") {
  const Dataset data = one_covariate({2.1, 1.9}, {1.0, 2.0, 3.0, 10.0});
  ProfileMatchConfig config;
  config.absolute = true;
  const MatchResult match =
      profile_match(data, Eigen::VectorXd::Constant(1, 2.0),
                    Eigen::VectorXd::Constant(1, 0.5), config);

  REQUIRE(match.selected_controls.size() == 3);
  std::vector<std::string> ids;
  for (int i : match.selected_controls) ids.push_back(data.unit(i).id);
  CHECK(ids == std::vector<std::string>{"c1", "c2", "c3"});
  CHECK(match.pairs.empty());
  for (int i : match.selected_controls) {
    CHECK(match.weights.weight(i) == doctest::Approx(4.0 / 3.0));
  }
  CHECK(match.weights.weight(5) == 0.0);  // the 10.0 control
  double mean = 0.0;
  for (int i : match.selected_controls) mean += data.covariates()(i, 0);
  mean /= 3.0;
  CHECK(mean == doctest::Approx(2.0));
}

TEST_CASE("profile matching keeps everyone when the target is the mean") {
  std::mt19937_64 rng(109);
  const Dataset data = oracles::random_dataset(rng, 3, 8, 2);
  const MatchResult match =
      profile_match(data, data.control_mean_profile(),
                    Eigen::VectorXd::Constant(2, 2.0));
  CHECK(static_cast<int>(match.selected_controls.size()) == 8);
  for (int i : match.selected_controls) {
    CHECK(match.weights.weight(i) == doctest::Approx(1.0));
  }
}

TEST_CASE("profile cardinality agrees with a subset brute force") {
  std::mt19937_64 rng(113);
  std::uniform_int_distribution<int> n_c_dist(4, 12);
  for (int rep = 0; rep < 20; ++rep) {
    const int n_c = n_c_dist(rng);
    const Dataset data = oracles::random_dataset(rng, 3, n_c, 2, 0.3);
    const Eigen::VectorXd target = data.treated_mean_profile();
    Eigen::VectorXd window(2);
    window << 0.6 * data.pooled_sd(0), 0.6 * data.pooled_sd(1);

    Eigen::MatrixXd values(n_c, 2);
    const auto& ctrl = data.control_indices();
    for (int i = 0; i < n_c; ++i) {
      values.row(i) = data.covariates().row(ctrl[static_cast<std::size_t>(i)]);
    }
    const int best =
        oracles::max_balanced_subset_bruteforce(values, target, window);

    if (best == 0) {
      CHECK_THROWS_AS(profile_match(data, target,
                                    Eigen::VectorXd::Constant(2, 0.6)),
                      InfeasibleError);
      continue;
    }
    const MatchResult match =
        profile_match(data, target, Eigen::VectorXd::Constant(2, 0.6));
    CHECK(static_cast<int>(match.selected_controls.size()) == best);
    // Recompute the constraints the result claims to satisfy.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    for (int i : match.selected_controls) {
      mean += data.covariates().row(i).transpose();
    }
    mean /= static_cast<double>(match.selected_controls.size());
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(mean(j) - target(j)) <= window(j) + 1e-7);
    }
  }
}

TEST_CASE("wider profile windows never shrink the kept subset") {
  std::mt19937_64 rng(127);
  const Dataset data = oracles::random_dataset(rng, 3, 12, 2, 0.4);
  const Eigen::VectorXd target = data.treated_mean_profile();
  std::size_t previous = 0;
  for (double tol : {0.35, 0.6, 1.0, 2.0}) {
    std::size_t kept = 0;
    try {
      kept = profile_match(data, target, Eigen::VectorXd::Constant(2, tol))
                 .selected_controls.size();
    } catch (const InfeasibleError&) {
      CHECK(previous == 0);
      continue;
    }
    CHECK(kept >= previous);
    previous = kept;
  }
  CHECK(previous > 0);
}

TEST_CASE("profile matching drops the synthetic outlier") {
  const Dataset data = generate_synthetic_example(GeneratorConfig{});
  const MatchResult match =
      profile_match(data, data.treated_mean_profile(),
                    Eigen::VectorXd::Constant(2, 0.25));
  int outlier = -1;
  for (int i : data.control_indices()) {
    if (data.covariates()(i, 0) == 264.0) outlier = i;
  }
  REQUIRE(outlier >= 0);
  CHECK(match.weights.weight(outlier) == 0.0);
  CHECK(std::find(match.selected_controls.begin(),
                  match.selected_controls.end(),
                  outlier) == match.selected_controls.end());
  CHECK(match.selected_controls.size() > 0);
}

TEST_CASE("profile matching enforces its guard rails") {
  std::mt19937_64 rng(131);
  const Dataset data = oracles::random_dataset(rng, 3, 12, 2);

  ProfileMatchConfig cap;
  cap.max_controls = 10;
  CHECK_THROWS_AS(profile_match(data, data.treated_mean_profile(),
                                Eigen::VectorXd::Constant(2, 0.5), cap),
                  ValidationError);

  CHECK_THROWS_AS(profile_match(data, data.treated_mean_profile(),
                                Eigen::VectorXd::Constant(2, -0.5)),
                  ValidationError);
  CHECK_THROWS_AS(profile_match(data, data.treated_mean_profile(),
                                Eigen::VectorXd::Constant(3, 0.5)),
                  ValidationError);
  CHECK_THROWS_AS(profile_match(data, Eigen::VectorXd::Constant(3, 0.0),
                                Eigen::VectorXd::Constant(2, 0.5)),
                  ValidationError);
}

TEST_CASE("an impossible target is reported as infeasible") {
  const Dataset data = one_covariate({2.0, 3.0}, {0.0, 1.0, 2.0});
  ProfileMatchConfig config;
  config.absolute = true;
  CHECK_THROWS_AS(profile_match(data, Eigen::VectorXd::Constant(1, 100.0),
                                Eigen::VectorXd::Constant(1, 0.5), config),
                  InfeasibleError);
}

TEST_CASE("an exhausted time budget raises a convergence error") {
  // A hair-thin window around an unattainable mean forces the search to
  // enumerate; a zero budget then trips the deadline.
  std::mt19937_64 rng(137);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> controls(46);
  for (auto& x : controls) x = uni(rng);
  const Dataset data = one_covariate({0.4, 0.6}, controls);
  ProfileMatchConfig config;
  config.absolute = true;
  config.time_budget_seconds = 0.0;
  CHECK_THROWS_AS(profile_match(data, Eigen::VectorXd::Constant(1, 0.5),
                                Eigen::VectorXd::Constant(1, 1e-9), config),
                  ConvergenceError);
}
