#include <doctest.h>

#include <cmath>
#include <random>

#include "attkit/balance.hpp"
#include "attkit/errors.hpp"
#include "attkit/implied_weights.hpp"
#include "attkit/matching.hpp"
#include "attkit/ols.hpp"
#include "oracles.hpp"

using namespace attkit;
using oracles::unit;

TEST_CASE("effective sample size follows the kish formula") {
  std::vector<Unit> units;
  for (int i = 0; i < 100; ++i) {
    units.push_back(unit("t" + std::to_string(i + 1), true, {1.0 * i}, 0.0));
  }
  units.push_back(unit("c1", false, {0.0}, 0.0));
  units.push_back(unit("c2", false, {1.0}, 0.0));
  const Dataset data = oracles::make_dataset(units);
  CHECK(effective_sample_size(WeightVector::uniform(data), Group::kTreated) ==
        doctest::Approx(100.0));

  // (2, 0): one unit carries everything.
  Eigen::VectorXd w = Eigen::VectorXd::Ones(data.n());
  w(100) = 2.0;
  w(101) = 0.0;
  const WeightVector two_zero =
      WeightVector::create(data, w, WeightMethod::kSbw);
  CHECK(effective_sample_size(two_zero, Group::kControl) ==
        doctest::Approx(1.0));
}

TEST_CASE("effective sample size of (1, 1, 2) is 16/6") {
  const Dataset data = oracles::make_dataset(
      {unit("t1", true, {0.0}, 0.0), unit("t2", true, {1.0}, 0.0),
       unit("c1", false, {0.0}, 0.0), unit("c2", false, {1.0}, 0.0),
       unit("c3", false, {2.0}, 0.0)});
  Eigen::VectorXd w(5);
  w << 1, 1, 1, 1, 2;
  // Slack normalization tolerance: this fixture checks the formula alone.
  const WeightVector weights =
      WeightVector::create(data, w, WeightMethod::kSbw, 10.0);
  CHECK(effective_sample_size(weights, Group::kControl) ==
        doctest::Approx(16.0 / 6.0).epsilon(1e-12));

  Eigen::VectorXd zeros = Eigen::VectorXd::Ones(5);
  zeros(2) = zeros(3) = zeros(4) = 0.0;
  const WeightVector dead =
      WeightVector::create(data, zeros, WeightMethod::kSbw, 10.0);
  CHECK_THROWS_AS(effective_sample_size(dead, Group::kControl),
                  ValidationError);
}

TEST_CASE("ess equals the nominal size exactly for constant weights") {
  std::mt19937_64 rng(47);
  const Dataset data = oracles::random_dataset(rng, 9, 14, 2);
  const WeightVector uniform = WeightVector::uniform(data);
  CHECK(effective_sample_size(uniform, Group::kTreated) ==
        doctest::Approx(9.0).epsilon(1e-12));
  CHECK(effective_sample_size(uniform, Group::kControl) ==
        doctest::Approx(14.0).epsilon(1e-12));

  // Non-constant non-negative weights strictly lose effective size.
  Eigen::VectorXd w = Eigen::VectorXd::Ones(data.n());
  w(data.control_indices()[0]) = 1.5;
  w(data.control_indices()[1]) = 0.5;
  const WeightVector uneven = WeightVector::create(data, w, WeightMethod::kSbw);
  const double ess = effective_sample_size(uneven, Group::kControl);
  CHECK(ess > 1.0);
  CHECK(ess < 14.0);
}

TEST_CASE("balance table under uniform weights shows the raw means") {
  const Dataset data = oracles::make_dataset(
      {unit("t1", true, {37.0}, 0.0), unit("t2", true, {17.4}, 0.0),
       unit("c1", false, {44.0}, 0.0), unit("c2", false, {46.0}, 0.0)});
  const BalanceTable table = balance_table(
      data, WeightVector::uniform(data), data.treated_mean_profile());
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].treated_weighted_mean ==
        doctest::Approx(27.2).epsilon(1e-12));
  CHECK(table.rows[0].control_weighted_mean ==
        doctest::Approx(45.0).epsilon(1e-12));
  CHECK(table.rows[0].target_mean == doctest::Approx(27.2).epsilon(1e-12));
  // Treated mean equals the target, so its standardized difference is zero.
  CHECK(table.rows[0].std_diff_treated == 0.0);
  CHECK(table.rows[0].std_diff_control > 0.0);
  CHECK(table.ess_treated == doctest::Approx(2.0));
  CHECK(table.ess_control == doctest::Approx(2.0));
  CHECK(table.nominal_treated == 2);
  CHECK(table.nominal_control == 2);
  CHECK(!table.ess_caveat_treated);
  CHECK(!table.ess_caveat_control);
}

TEST_CASE("uri rows agree across groups on a random instance") {
  std::mt19937_64 rng(53);
  const Dataset data = oracles::random_dataset(rng, 8, 13, 3);
  const WeightVector w = uri_weights(data);
  const BalanceTable table =
      balance_table(data, w, data.treated_mean_profile());
  for (const auto& row : table.rows) {
    CHECK(std::abs(row.treated_weighted_mean - row.control_weighted_mean) <=
          1e-8);
  }
  CHECK(table.ess_caveat_control == w.has_negative());
}

TEST_CASE("zero pooled sd with a gap is reported as infinite, not a crash") {
  const Dataset data = oracles::make_dataset(
      {unit("t1", true, {5.0}, 0.0), unit("t2", true, {5.0}, 0.0),
       unit("c1", false, {7.0}, 0.0), unit("c2", false, {7.0}, 0.0)});
  const BalanceTable table = balance_table(
      data, WeightVector::uniform(data), data.treated_mean_profile());
  CHECK(std::isinf(table.rows[0].std_diff_control));
  CHECK(table.rows[0].std_diff_control > 0.0);
  CHECK(table.rows[0].std_diff_treated == 0.0);
}

TEST_CASE("implied target profile is the common weighted mean under uri") {
  std::mt19937_64 rng(59);
  const Dataset data = oracles::random_dataset(rng, 7, 12, 2);
  const WeightVector w = uri_weights(data);
  const Eigen::VectorXd profile = implied_target_profile(data, w);
  const auto sides = group_means(data, w);
  CHECK((profile - sides.first).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK((profile - sides.second).lpNorm<Eigen::Infinity>() <= 1e-8);

  CHECK_THROWS_AS(implied_target_profile(data, WeightVector::uniform(data)),
                  ValidationError);
}

TEST_CASE("implied target profile of a balanced design is the raw mean") {
  const Dataset data = oracles::make_dataset(
      {unit("t1", true, {1.0}, 2.0), unit("t2", true, {3.0}, 1.0),
       unit("c1", false, {1.0}, 0.0), unit("c2", false, {3.0}, 5.0)});
  const Eigen::VectorXd profile =
      implied_target_profile(data, uri_weights(data));
  CHECK(profile(0) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("negative weight report censuses magnitude and ids") {
  const Dataset data = oracles::make_dataset(
      {unit("t1", true, {0.0}, 0.0), unit("t2", true, {1.0}, 0.0),
       unit("c1", false, {0.0}, 0.0), unit("c2", false, {1.0}, 0.0),
       unit("c3", false, {2.0}, 0.0)});

  const NegativeWeightReport clean =
      negative_weight_report(data, WeightVector::uniform(data));
  CHECK(clean.count == 0);
  CHECK(clean.ids.empty());
  CHECK(clean.total_negative_mass == 0.0);
  CHECK(clean.max_magnitude_id.empty());

  Eigen::VectorXd w(5);
  w << 1.0, 1.0, -0.5, 1.5, 2.0;
  const NegativeWeightReport one = negative_weight_report(
      data, WeightVector::create(data, w, WeightMethod::kUri));
  CHECK(one.count == 1);
  REQUIRE(one.ids.size() == 1);
  CHECK(one.ids[0] == "c1");
  CHECK(one.total_negative_mass == doctest::Approx(-0.5));
  CHECK(one.max_magnitude_id == "c1");

  Eigen::VectorXd two(5);
  two << 1.0, 1.0, -1.0, -0.5, 4.5;
  const NegativeWeightReport pair = negative_weight_report(
      data, WeightVector::create(data, two, WeightMethod::kUri));
  CHECK(pair.count == 2);
  REQUIRE(pair.ids.size() == 2);
  CHECK(pair.ids[0] == "c1");  // larger magnitude first
  CHECK(pair.ids[1] == "c2");
  CHECK(pair.total_negative_mass == doctest::Approx(-1.5));
  CHECK(pair.max_magnitude_id == "c1");
}

TEST_CASE("sample boundedness interval and flags") {
  const Dataset data = oracles::make_dataset(
      {unit("t1", true, {0.0}, 10.0), unit("t2", true, {1.0}, 10.0),
       unit("c1", false, {0.0}, 0.0), unit("c2", false, {1.0}, 2.0)});
  const WeightVector uniform = WeightVector::uniform(data);

  // All pairwise treated-minus-control differences live in [8, 10].
  const SampleBoundedness inside =
      sample_boundedness_check(data, uniform, 9.0);
  CHECK(inside.interval_low == doctest::Approx(8.0));
  CHECK(inside.interval_high == doctest::Approx(10.0));
  CHECK(!inside.outside);
  CHECK(!inside.extrapolation_capable);

  const SampleBoundedness outside =
      sample_boundedness_check(data, uniform, 12.0);
  CHECK(outside.outside);

  Eigen::VectorXd w(4);
  w << 1.0, 1.0, -0.5, 2.5;
  const SampleBoundedness capable = sample_boundedness_check(
      data, WeightVector::create(data, w, WeightMethod::kUri), 9.0);
  CHECK(capable.extrapolation_capable);
}

TEST_CASE("uniform contrasts are always inside the boundedness interval") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset data = oracles::random_dataset(rng, 4, 7, 2);
    double gap = 0.0;
    for (int i : data.treated_indices()) gap += data.unit(i).outcome;
    gap /= data.n_treated();
    double c = 0.0;
    for (int i : data.control_indices()) c += data.unit(i).outcome;
    gap -= c / data.n_control();
    const SampleBoundedness check =
        sample_boundedness_check(data, WeightVector::uniform(data), gap);
    CHECK(!check.outside);
  }
}

TEST_CASE("matched-sample ess equals the retained count") {
  std::mt19937_64 rng(67);
  const Dataset data = oracles::random_dataset(rng, 5, 11, 2);
  const MatchResult pairs = optimal_pair_match(data);
  CHECK(effective_sample_size(pairs.weights, Group::kControl) ==
        doctest::Approx(5.0).epsilon(1e-12));

  const MatchResult subset =
      profile_match(data, data.treated_mean_profile(),
                    Eigen::VectorXd::Constant(2, 0.75));
  CHECK(effective_sample_size(subset.weights, Group::kControl) ==
        doctest::Approx(static_cast<double>(subset.selected_controls.size()))
            .epsilon(1e-12));
}
