#include <doctest.h>

#include "dcmac/report.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

using namespace dcmac;

namespace {

MacScenario scenario(double lambda, int so = 5) {
  MacScenario s;
  s.arrival_rate = lambda;
  s.superframe_order = so;
  return s;
}

ComparisonRow make_row(double duty, double lambda, std::optional<double> s,
                       std::optional<double> epp) {
  ComparisonRow r;
  r.duty_cycle = duty;
  r.lambda = lambda;
  r.s_analytical = s;
  r.epp_analytical = epp;
  return r;
}

bool same_opt(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  if (std::isinf(*a) || std::isinf(*b)) return *a == *b;
  return *a == *b;  // exact: the format is round-trippable
}

SweepOptions fast_sweep_options() {
  SweepOptions opts;
  opts.horizon_beacon_intervals = 20;
  opts.seed = 99;
  opts.arrival_model = ArrivalModel::BernoulliPerSlot;
  opts.jobs = 1;
  return opts;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("single-scenario analytical row") {
  const ComparisonRow row = run_solve_row(scenario(20.0));
  CHECK(row.lambda == 20.0);
  CHECK(row.duty_cycle == 1.0);
  REQUIRE(row.s_analytical.has_value());
  CHECK(*row.s_analytical > 0.0);
  CHECK(*row.s_analytical < 1.0);
  REQUIRE(row.eavg_analytical.has_value());
  CHECK(*row.eavg_analytical == doctest::Approx(1.0).epsilon(1e-12));  // identity powers
  REQUIRE(row.epp_analytical.has_value());
  CHECK(*row.epp_analytical > 0.0);
  CHECK_FALSE(row.s_sim_mean.has_value());
  CHECK_FALSE(row.rel_error_s.has_value());
  CHECK(row.error.empty());
}

TEST_CASE("a silent scenario reports zero throughput and infinite cost") {
  const ComparisonRow row = run_solve_row(scenario(0.0));
  CHECK(*row.s_analytical == 0.0);
  CHECK(std::isinf(*row.epp_analytical));
}

TEST_CASE("sweep rows come back sorted and deduplicated") {
  SweepGrid grid;
  grid.lambda_values = {20.0, 5.0, 20.0};
  grid.superframe_orders = {3, 5, 1, 5};
  grid.replications = 1;

  const auto rows = run_sweep(MacScenario{}, grid, SweepMode::Analytical, fast_sweep_options());
  REQUIRE(rows.size() == 6);  // 3 distinct orders x 2 distinct lambdas
  const double expect_duty[6] = {1.0, 1.0, 0.25, 0.25, 0.0625, 0.0625};
  const double expect_lambda[6] = {5.0, 20.0, 5.0, 20.0, 5.0, 20.0};
  for (int i = 0; i < 6; ++i) {
    CHECK(rows[i].duty_cycle == expect_duty[i]);
    CHECK(rows[i].lambda == expect_lambda[i]);
    CHECK(rows[i].s_analytical.has_value());
    CHECK_FALSE(rows[i].s_sim_mean.has_value());
    CHECK(rows[i].error.empty());
  }
}

TEST_CASE("both-mode sweep fills the simulation columns") {
  SweepGrid grid;
  grid.lambda_values = {0.0, 20.0};
  grid.superframe_orders = {5};
  grid.replications = 3;

  const auto rows = run_sweep(MacScenario{}, grid, SweepMode::Both, fast_sweep_options());
  REQUIRE(rows.size() == 2);

  // lambda = 0: both routes agree on silence; relative error is exactly zero.
  REQUIRE(rows[0].s_sim_mean.has_value());
  CHECK(*rows[0].s_sim_mean == 0.0);
  CHECK(*rows[0].rel_error_s == 0.0);
  CHECK(std::isinf(*rows[0].epp_sim_mean));
  CHECK(std::isinf(*rows[0].epp_sim_stderr));

  // lambda = 20: live traffic in both routes.
  CHECK(*rows[1].s_sim_mean > 0.0);
  CHECK(*rows[1].s_sim_stderr >= 0.0);
  CHECK(*rows[1].epp_sim_mean > 0.0);
  CHECK(std::isfinite(*rows[1].epp_sim_mean));
  REQUIRE(rows[1].rel_error_s.has_value());
  CHECK(*rows[1].rel_error_s ==
        doctest::Approx(std::abs(*rows[1].s_analytical - *rows[1].s_sim_mean) /
                        *rows[1].s_sim_mean)
            .epsilon(1e-12));
}

TEST_CASE("sweeps are byte-deterministic, whatever the worker count") {
  SweepGrid grid;
  grid.lambda_values = {5.0, 40.0};
  grid.superframe_orders = {5, 3};
  grid.replications = 2;

  SweepOptions serial = fast_sweep_options();
  const std::string a = to_csv(run_sweep(MacScenario{}, grid, SweepMode::Both, serial));
  const std::string b = to_csv(run_sweep(MacScenario{}, grid, SweepMode::Both, serial));

  SweepOptions threaded = serial;
  threaded.jobs = 4;
  const std::string c = to_csv(run_sweep(MacScenario{}, grid, SweepMode::Both, threaded));

  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("a failing grid point annotates its row and spares the rest") {
  // Quarter duty cycle with a profile whose beacon cost exceeds the idle
  // budget trips the modeling-regime error in the analytical route only at
  // low duty cycles; the sweep must carry on.
  MacScenario base;
  base.energy.p_sleep = 0.001;
  base.energy.t_sleep_to_idle = 2.0;  // absurd wake-up time: 6250 slots
  SweepGrid grid;
  grid.lambda_values = {20.0};
  grid.superframe_orders = {5, 1};
  grid.replications = 1;

  const auto rows = run_sweep(base, grid, SweepMode::Analytical, fast_sweep_options());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].error.empty());  // full duty cycle books no wake-ups
  CHECK(rows[0].s_analytical.has_value());
  CHECK_FALSE(rows[1].s_analytical.has_value());
  CHECK(rows[1].error.find("analytical:") == 0);
}

TEST_CASE("number formatting round-trips and spells infinities") {
  CHECK(format_g17(0.1) == "0.10000000000000001");
  CHECK(format_g17(1.0) == "1");
  CHECK(format_g17(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_g17(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_g17(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("CSV round-trips exactly") {
  std::vector<ComparisonRow> rows;
  ComparisonRow full;
  full.lambda = 20.0;
  full.duty_cycle = 0.25;
  full.s_analytical = 0.1234567890123456789;
  full.s_sim_mean = 0.1;
  full.s_sim_stderr = 1e-300;
  full.eavg_analytical = 1.0;
  full.epp_analytical = std::numeric_limits<double>::infinity();
  full.epp_sim_mean = 3.25;
  full.epp_sim_stderr = 0.0;
  full.rel_error_s = 0.5;
  rows.push_back(full);
  rows.push_back(make_row(1.0, 0.0, std::nullopt, std::nullopt));  // sparse row

  const std::string csv = to_csv(rows);
  const std::vector<ComparisonRow> back = parse_csv(csv);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].lambda == rows[i].lambda);
    CHECK(back[i].duty_cycle == rows[i].duty_cycle);
    CHECK(same_opt(back[i].s_analytical, rows[i].s_analytical));
    CHECK(same_opt(back[i].s_sim_mean, rows[i].s_sim_mean));
    CHECK(same_opt(back[i].s_sim_stderr, rows[i].s_sim_stderr));
    CHECK(same_opt(back[i].eavg_analytical, rows[i].eavg_analytical));
    CHECK(same_opt(back[i].epp_analytical, rows[i].epp_analytical));
    CHECK(same_opt(back[i].epp_sim_mean, rows[i].epp_sim_mean));
    CHECK(same_opt(back[i].epp_sim_stderr, rows[i].epp_sim_stderr));
    CHECK(same_opt(back[i].rel_error_s, rows[i].rel_error_s));
  }
  // Windows line endings are tolerated.
  std::string crlf = csv;
  std::size_t pos = 0;
  while ((pos = crlf.find('\n', pos)) != std::string::npos) {
    crlf.replace(pos, 1, "\r\n");
    pos += 2;
  }
  CHECK(parse_csv(crlf).size() == rows.size());
}

TEST_CASE("CSV parsing rejects malformed input") {
  CHECK_THROWS_AS(parse_csv(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv("lambda,duty\n1,1\n"), std::invalid_argument);

  const std::string header =
      "lambda,duty_cycle,S_analytical,S_sim_mean,S_sim_stderr,Eavg_analytical,"
      "epp_analytical,epp_sim_mean,epp_sim_stderr,rel_error_S";
  CHECK_THROWS_AS(parse_csv(header + "\n1,1,0.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv(header + "\n1,,0.5,,,,,,,\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_csv(header + "\n1,abc,,,,,,,,\n"), std::invalid_argument);
  CHECK(parse_csv(header + "\n1,0.25,,,,,,,,\n").size() == 1);
}

TEST_CASE("JSON output uses null for absent and strings for infinite") {
  std::vector<ComparisonRow> rows;
  ComparisonRow r = make_row(1.0, 0.0, 0.0, std::numeric_limits<double>::infinity());
  rows.push_back(r);
  ComparisonRow bad = make_row(0.25, 5.0, std::nullopt, std::nullopt);
  bad.error = "analytical: something failed";
  rows.push_back(bad);

  const nlohmann::json doc = nlohmann::json::parse(to_json(rows));
  REQUIRE(doc.contains("rows"));
  REQUIRE(doc["rows"].size() == 2);

  const auto& first = doc["rows"][0];
  CHECK(first["lambda"] == 0.0);
  CHECK(first["S_analytical"] == 0.0);
  CHECK(first["epp_analytical"] == "inf");
  CHECK(first["S_sim_mean"].is_null());
  CHECK_FALSE(first.contains("error"));

  const auto& second = doc["rows"][1];
  CHECK(second["error"] == "analytical: something failed");
  CHECK(second["S_analytical"].is_null());
}

TEST_CASE("trend verdicts on a well-ordered grid") {
  std::vector<ComparisonRow> rows;
  rows.push_back(make_row(1.0, 10.0, 0.30, 1.00));
  rows.push_back(make_row(1.0, 640.0, 0.50, 1.20));
  rows.push_back(make_row(0.25, 10.0, 0.20, 0.50));  // cheap at the exempt lambda
  rows.push_back(make_row(0.25, 640.0, 0.40, 1.50));

  const TrendCheck tc = check_trends(rows);
  CHECK(tc.throughput_ok);
  CHECK(tc.energy_ok);
  CHECK(tc.detail == "all duty-cycle trends hold");
}

TEST_CASE("trend checks flag a throughput inversion") {
  std::vector<ComparisonRow> rows;
  rows.push_back(make_row(1.0, 10.0, 0.30, 1.00));
  rows.push_back(make_row(1.0, 640.0, 0.50, 1.20));
  rows.push_back(make_row(0.25, 10.0, 0.20, 1.30));
  rows.push_back(make_row(0.25, 640.0, 0.60, 1.50));  // beats the full duty cycle

  const TrendCheck tc = check_trends(rows);
  CHECK_FALSE(tc.throughput_ok);
  CHECK(tc.energy_ok);
  CHECK(tc.detail.find("throughput rises") != std::string::npos);
}

TEST_CASE("trend checks flag cheaper packets at a lower duty cycle") {
  std::vector<ComparisonRow> rows;
  rows.push_back(make_row(1.0, 10.0, 0.30, 1.00));
  rows.push_back(make_row(1.0, 640.0, 0.50, 1.20));
  rows.push_back(make_row(0.25, 10.0, 0.20, 1.30));
  rows.push_back(make_row(0.25, 640.0, 0.40, 0.90));  // cheaper despite sleeping more

  const TrendCheck tc = check_trends(rows);
  CHECK(tc.throughput_ok);
  CHECK_FALSE(tc.energy_ok);
  CHECK(tc.detail.find("energy per packet drops") != std::string::npos);
}

TEST_CASE("equal throughput at the extremes is not a strict separation") {
  std::vector<ComparisonRow> rows;
  rows.push_back(make_row(1.0, 640.0, 0.50, 1.00));
  rows.push_back(make_row(0.25, 640.0, 0.50, 1.20));
  const TrendCheck tc = check_trends(rows);
  CHECK_FALSE(tc.throughput_ok);
}

TEST_CASE("a single duty cycle passes vacuously") {
  std::vector<ComparisonRow> rows;
  rows.push_back(make_row(1.0, 10.0, 0.3, 1.0));
  rows.push_back(make_row(1.0, 640.0, 0.5, 1.2));
  const TrendCheck tc = check_trends(rows);
  CHECK(tc.throughput_ok);
  CHECK(tc.energy_ok);
  CHECK(tc.detail.find("vacuously") != std::string::npos);
}

TEST_CASE("trend checks demand a complete grid") {
  std::vector<ComparisonRow> rows;
  rows.push_back(make_row(1.0, 10.0, 0.3, 1.0));
  rows.push_back(make_row(1.0, 640.0, 0.5, 1.2));
  rows.push_back(make_row(0.25, 10.0, 0.2, 1.3));  // missing (0.25, 640)
  CHECK_THROWS_AS(check_trends(rows), std::invalid_argument);
  CHECK_THROWS_AS(check_trends({}), std::invalid_argument);
}

TEST_CASE("trend checks follow the simulated family when analytical is absent") {
  std::vector<ComparisonRow> rows;
  const auto sim_row = [](double duty, double lambda, double s, double epp) {
    ComparisonRow r;
    r.duty_cycle = duty;
    r.lambda = lambda;
    r.s_sim_mean = s;
    r.epp_sim_mean = epp;
    return r;
  };
  rows.push_back(sim_row(1.0, 640.0, 0.5, 1.0));
  rows.push_back(sim_row(0.25, 640.0, 0.6, 1.2));  // inversion in the sim family
  const TrendCheck tc = check_trends(rows);
  CHECK_FALSE(tc.throughput_ok);
  CHECK(tc.detail.find("simulated") != std::string::npos);
}

}  // TEST_SUITE
