#pragma once

#include "dcmac/fixed_point.hpp"
#include "dcmac/metrics.hpp"
#include "dcmac/scenario.hpp"
#include "dcmac/simulator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dcmac {

// Analytical solve plus derived metrics for one scenario.
struct AnalyticalPoint {
  FixedPointSolution solution;
  PerformanceReport report;
};

AnalyticalPoint analyze(const MacScenario& s, const SolverOptions& opts = {});

// One grid point of a sweep. Absent fields were not requested or failed;
// `error` carries the reason for a partial row.
struct ComparisonRow {
  double lambda = 0.0;
  double duty_cycle = 1.0;
  std::optional<double> s_analytical;
  std::optional<double> s_sim_mean;
  std::optional<double> s_sim_stderr;
  std::optional<double> eavg_analytical;
  std::optional<double> epp_analytical;
  std::optional<double> epp_sim_mean;
  std::optional<double> epp_sim_stderr;
  std::optional<double> rel_error_s;
  std::string error;
};

struct SweepGrid {
  std::vector<double> lambda_values;
  std::vector<int> superframe_orders;
  int replications = 10;
};

enum class SweepMode { Analytical, Simulate, Both };

struct SweepOptions {
  SolverOptions solver;
  int horizon_beacon_intervals = 200;
  std::uint64_t seed = 1;
  ArrivalModel arrival_model = ArrivalModel::ExactPoisson;
  BufferPolicy buffer_policy = BufferPolicy::SingleDrop;
  int queue_capacity = 1;
  int jobs = 0;  // worker threads; <= 0 picks the hardware concurrency
};

// Analytical row for a single scenario (sim columns left empty).
ComparisonRow run_solve_row(const MacScenario& s, const SolverOptions& opts = {});

// Full grid sweep. Rows come back sorted by duty cycle descending, then
// lambda ascending, and are byte-identical across runs for a fixed seed
// regardless of the worker count. Failures at one grid point annotate that
// row and leave the rest of the sweep intact.
std::vector<ComparisonRow> run_sweep(const MacScenario& base, const SweepGrid& grid,
                                     SweepMode mode, const SweepOptions& opts);

// Number formatting used in all text output: round-trippable shortest-17
// decimal digits, with infinities spelled "inf" / "-inf".
std::string format_g17(double v);

std::string to_csv(const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> parse_csv(const std::string& text);
std::string to_json(const std::vector<ComparisonRow>& rows);

// Duty-cycle trend verdicts over a completed sweep: throughput must not
// increase when the duty cycle drops (checked at the highest lambda, strict
// between the extremes), and energy per delivered packet must not drop when
// the duty cycle drops (checked at every lambda above the lowest).
struct TrendCheck {
  bool throughput_ok = false;
  bool energy_ok = false;
  std::string detail;
};

TrendCheck check_trends(const std::vector<ComparisonRow>& rows);

}  // namespace dcmac
