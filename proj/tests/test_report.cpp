#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "json.hpp"

#include "attkit/balance.hpp"
#include "attkit/errors.hpp"
#include "attkit/estimate.hpp"
#include "attkit/implied_weights.hpp"
#include "attkit/matching.hpp"
#include "attkit/report.hpp"
#include "oracles.hpp"

using namespace attkit;
using oracles::unit;

namespace {

Dataset contrast_fixture() {
  std::vector<Unit> units = {unit("t1", true, {1.0}, 10.0),
                             unit("t2", true, {2.0}, 20.0),
                             unit("c1", false, {1.0}, 5.0),
                             unit("c2", false, {2.0}, 5.0)};
  return oracles::make_dataset(units);
}

Dataset dashboard_data() {
  std::vector<Unit> units = {unit("t1", true, {27.0, 4.5}, 100.0),
                             unit("t2", true, {28.0, 4.7}, 120.0),
                             unit("c1", false, {40.0, 4.0}, 90.0),
                             unit("c2", false, {50.0, 4.2}, 80.0)};
  return Dataset::create(std::move(units), {"income", "visits"});
}

MethodResult dashboard_fixture(const Dataset& data, double att,
                               WeightMethod method) {
  MethodResult result{
      WeightVector::create(data, Eigen::VectorXd::Ones(data.n()), method),
      Estimate{},
      BalanceTable{},
      Eigen::VectorXd::Zero(2),
      NegativeWeightReport{},
      SampleBoundedness{}};
  result.estimate.att = att;
  result.estimate.method = method;
  result.estimate.treated_mean = 110.0;
  result.estimate.control_mean = 85.0;
  result.balance.rows = {{"income", 29.6, 29.6, 27.2, 0.3, 0.3},
                         {"visits", 4.3, 4.3, 4.6, -0.2, -0.2}};
  result.balance.ess_treated = 100.0;
  result.balance.ess_control = 150.3;
  result.balance.nominal_treated = 100;
  result.balance.nominal_control = 200;
  result.boundedness.interval_low = -1200.0;
  result.boundedness.interval_high = 1900.0;
  result.target_profile << 27.2, 4.6;
  return result;
}

}  // namespace

TEST_CASE("uniform weights contrast raw group means") {
  const Dataset data = contrast_fixture();
  const Estimate est = weighted_contrast(data, WeightVector::uniform(data));
  CHECK(est.att == doctest::Approx(10.0));
  CHECK(est.treated_mean == doctest::Approx(15.0));
  CHECK(est.control_mean == doctest::Approx(5.0));
  CHECK(est.n_used_treated == 2);
  CHECK(est.n_used_control == 2);
  // Pairwise differences span [5, 15]; 10 sits inside.
  CHECK(est.sample_bounded);
  CHECK(est.method == WeightMethod::kUniform);
}

TEST_CASE("zero weights drop units from the used counts") {
  const Dataset data = contrast_fixture();
  Eigen::VectorXd w(4);
  w << 2.0, 0.0, 1.0, 1.0;
  const Estimate est =
      weighted_contrast(data, WeightVector::create(data, w, WeightMethod::kUri));
  CHECK(est.att == doctest::Approx(5.0));
  CHECK(est.n_used_treated == 1);
  CHECK(est.n_used_control == 2);
}

TEST_CASE("negative weights can push the estimate out of sample") {
  std::vector<Unit> units = {unit("t1", true, {1.0}, 10.0),
                             unit("t2", true, {2.0}, 10.0),
                             unit("c1", false, {1.0}, 0.0),
                             unit("c2", false, {2.0}, 2.0)};
  const Dataset data = oracles::make_dataset(units);
  Eigen::VectorXd w(4);
  w << 1.0, 1.0, 2.2, -0.2;
  const Estimate est =
      weighted_contrast(data, WeightVector::create(data, w, WeightMethod::kUri));
  // Control mean -0.2 lifts the contrast to 10.2, past the largest observed
  // pairwise difference of 10.
  CHECK(est.att == doctest::Approx(10.2));
  CHECK(!est.sample_bounded);
}

TEST_CASE("the regression coefficient is the implied weighted contrast") {
  std::mt19937_64 rng(139);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 10; ++rep) {
    Dataset data = oracles::random_dataset(rng, 6, 9, 2);
    std::vector<Unit> units = data.units();
    for (auto& u : units) {
      u.outcome = 2.0 + u.covariates(0) - 0.5 * u.covariates(1) +
                  (u.treated ? 1.5 : 0.0) + 0.3 * normal(rng);
    }
    data = Dataset::create(std::move(units), data.covariate_names());
    const Estimate est = weighted_contrast(data, uri_weights(data));
    CHECK(std::abs(est.att - regression_att(data)) <= 1e-8);
  }
}

TEST_CASE("the contrast is linear in the outcomes") {
  std::mt19937_64 rng(149);
  Dataset data = oracles::random_dataset(rng, 5, 7, 2);
  std::vector<Unit> scaled_units = data.units();
  for (auto& u : scaled_units) u.outcome = 3.0 * u.outcome - 7.0;
  const Dataset scaled =
      Dataset::create(std::move(scaled_units), data.covariate_names());

  const Estimate base = weighted_contrast(data, uri_weights(data));
  const Estimate moved = weighted_contrast(scaled, uri_weights(scaled));
  CHECK(moved.att == doctest::Approx(3.0 * base.att).epsilon(1e-10));

  const Estimate base_u = weighted_contrast(data, WeightVector::uniform(data));
  const Estimate moved_u =
      weighted_contrast(scaled, WeightVector::uniform(scaled));
  CHECK(moved_u.att == doctest::Approx(3.0 * base_u.att).epsilon(1e-10));
}

TEST_CASE("pair matching estimates the mean within-pair difference") {
  std::mt19937_64 rng(151);
  std::normal_distribution<double> normal;
  Dataset data = oracles::random_dataset(rng, 4, 7, 2);
  std::vector<Unit> units = data.units();
  for (auto& u : units) u.outcome = normal(rng);
  data = Dataset::create(std::move(units), data.covariate_names());

  const MatchResult match = optimal_pair_match(data);
  const Estimate est = weighted_contrast(data, match.weights);
  double mean_diff = 0.0;
  for (const auto& pr : match.pairs) {
    mean_diff += data.unit(pr.treated).outcome - data.unit(pr.control).outcome;
  }
  mean_diff /= static_cast<double>(match.pairs.size());
  CHECK(est.att == doctest::Approx(mean_diff).epsilon(1e-10));
}

TEST_CASE("the text report carries the dashboard numbers") {
  const Dataset data = dashboard_data();
  const MethodResult result =
      dashboard_fixture(data, 557.0, WeightMethod::kMri);
  const std::string text = render_text(result);
  for (const char* token :
       {"557", "29.6", "27.2", "4.3", "4.6", "income", "visits",
        "negative weights: none", "sample bounded: yes", "mri"}) {
    INFO(token);
    CHECK(text.find(token) != std::string::npos);
  }

  MethodResult flagged = dashboard_fixture(data, 557.0, WeightMethod::kUri);
  flagged.negatives.count = 2;
  flagged.negatives.ids = {"o1", "c7"};
  flagged.negatives.total_negative_mass = -11.4;
  flagged.boundedness.outside = true;
  const std::string warned = render_text(flagged);
  CHECK(warned.find("o1, c7") != std::string::npos);
  CHECK(warned.find("-11.4") != std::string::npos);
  CHECK(warned.find("sample bounded: no") != std::string::npos);
}

TEST_CASE("the json report uses the fixed schema and round-trips") {
  const Dataset data = dashboard_data();
  MethodResult result = dashboard_fixture(data, 557.0, WeightMethod::kMri);
  result.estimate.att = 0.1 + 0.2;  // not representable exactly
  result.balance.rows[0].std_diff_treated = M_PI;

  const nlohmann::json j = nlohmann::json::parse(render_json(result));
  const std::set<std::string> expected = {
      "method", "att",  "ess",           "nominal",
      "balance", "negative_weights", "sample_bounded"};
  std::set<std::string> got;
  for (const auto& item : j.items()) got.insert(item.key());
  CHECK(got == expected);

  CHECK(j["method"] == "mri");
  CHECK(j["att"].get<double>() == 0.1 + 0.2);
  CHECK(j["ess"]["treated"].get<double>() == 100.0);
  CHECK(j["ess"]["control"].get<double>() == 150.3);
  CHECK(j["nominal"]["treated"].get<int>() == 100);
  CHECK(j["nominal"]["control"].get<int>() == 200);
  REQUIRE(j["balance"].is_array());
  REQUIRE(j["balance"].size() == 2);
  const std::set<std::string> row_keys = {"name", "treated", "control",
                                          "target", "sd_t", "sd_c"};
  std::set<std::string> got_row;
  for (const auto& item : j["balance"][0].items()) got_row.insert(item.key());
  CHECK(got_row == row_keys);
  CHECK(j["balance"][0]["name"] == "income");
  CHECK(j["balance"][0]["sd_t"].get<double>() == M_PI);
  CHECK(j["balance"][1]["target"].get<double>() == 4.6);
  CHECK(j["negative_weights"]["count"].get<int>() == 0);
  CHECK(j["negative_weights"]["ids"].is_array());
  CHECK(j["sample_bounded"].get<bool>() == true);

  std::vector<MethodResult> both = {result, result};
  const nlohmann::json array = nlohmann::json::parse(render_json(both));
  REQUIRE(array.is_array());
  CHECK(array.size() == 2);
  CHECK(array[0] == array[1]);
}

TEST_CASE("the csv report is one row per method") {
  const Dataset data = dashboard_data();
  const std::vector<MethodResult> results = {
      dashboard_fixture(data, -985.0, WeightMethod::kSbw),
      dashboard_fixture(data, -1114.0, WeightMethod::kPairMatch)};
  const std::string csv = render_csv(results);

  CHECK(csv.rfind("method,att,", 0) == 0);
  CHECK(csv.find("income_treated") != std::string::npos);
  CHECK(csv.find("visits_sd_c") != std::string::npos);
  CHECK(csv.find("sbw,-985,") != std::string::npos);
  CHECK(csv.find("pair,-1114,") != std::string::npos);
  const auto lines = static_cast<std::size_t>(
      std::count(csv.begin(), csv.end(), '\n'));
  CHECK(lines == 3);  // header + two methods

  CHECK_THROWS_AS(render_csv({}), ValidationError);
}

TEST_CASE("the svg report draws every covariate") {
  const Dataset data = dashboard_data();
  const MethodResult result =
      dashboard_fixture(data, 557.0, WeightMethod::kUri);
  const std::string svg = render_svg(data, result);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("income") != std::string::npos);
  CHECK(svg.find("visits") != std::string::npos);
  CHECK(svg.find("557") != std::string::npos);
  CHECK(svg.find("weight histogram") != std::string::npos);
}

TEST_CASE("report format names round-trip") {
  for (ReportFormat f : {ReportFormat::kText, ReportFormat::kJson,
                         ReportFormat::kCsv, ReportFormat::kSvg}) {
    CHECK(report_format_from_string(to_string(f)) == f);
  }
  CHECK_THROWS_AS(report_format_from_string("yaml"), ValidationError);
}
