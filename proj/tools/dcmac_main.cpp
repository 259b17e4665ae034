// Command-line front end: analytical solves, simulations, grid sweeps and
// trend checks for duty-cycled slotted CSMA/CA networks.

#include "dcmac/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using dcmac::format_g17;

struct ScenarioFlags {
  std::optional<std::string> config;
  std::optional<std::string> energy;
  std::optional<int> nodes, bo, so, payload_bytes, header_bytes;
  std::optional<int> min_be, max_be, stages, beacon_slots;
  std::optional<double> lambda, phy_rate, symbol_rate;
  std::optional<double> p_sleep, p_idle, p_rx, p_tx, t_sleep_to_idle, t_idle_to_rx;
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& f) {
  cmd->add_option("--config", f.config, "scenario file (key = value lines)");
  cmd->add_option("--energy", f.energy, "energy profile file (key = value lines)");
  cmd->add_option("--nodes", f.nodes, "number of contending nodes");
  cmd->add_option("--lambda", f.lambda, "frame arrival rate per node (frames/s)");
  cmd->add_option("--bo", f.bo, "beacon order");
  cmd->add_option("--so", f.so, "superframe order");
  cmd->add_option("--payload-bytes", f.payload_bytes, "payload size");
  cmd->add_option("--header-bytes", f.header_bytes, "header overhead");
  cmd->add_option("--phy-rate", f.phy_rate, "PHY bit rate (bit/s)");
  cmd->add_option("--symbol-rate", f.symbol_rate, "PHY symbol rate (symbol/s)");
  cmd->add_option("--min-be", f.min_be, "minimum backoff exponent");
  cmd->add_option("--max-be", f.max_be, "maximum backoff exponent");
  cmd->add_option("--stages", f.stages, "maximum backoff stages per frame");
  cmd->add_option("--beacon-slots", f.beacon_slots, "beacon length in slots");
  cmd->add_option("--p-sleep", f.p_sleep, "sleep power (mW)");
  cmd->add_option("--p-idle", f.p_idle, "idle power (mW)");
  cmd->add_option("--p-rx", f.p_rx, "receive power (mW)");
  cmd->add_option("--p-tx", f.p_tx, "transmit power (mW)");
  cmd->add_option("--t-sleep-to-idle", f.t_sleep_to_idle, "wake-up transition time (s)");
  cmd->add_option("--t-idle-to-rx", f.t_idle_to_rx, "receiver ramp time (s)");
}

dcmac::MacScenario build_scenario(const ScenarioFlags& f) {
  dcmac::MacScenario s;
  if (f.config) dcmac::apply_scenario_kv(dcmac::parse_kv_file(*f.config), s);
  if (f.energy) dcmac::apply_energy_kv(dcmac::parse_kv_file(*f.energy), s.energy);
  if (f.nodes) s.n_nodes = *f.nodes;
  if (f.lambda) s.arrival_rate = *f.lambda;
  if (f.bo) s.beacon_order = *f.bo;
  if (f.so) s.superframe_order = *f.so;
  if (f.payload_bytes) s.payload_bytes = *f.payload_bytes;
  if (f.header_bytes) s.header_bytes = *f.header_bytes;
  if (f.phy_rate) s.phy_rate = *f.phy_rate;
  if (f.symbol_rate) s.symbol_rate = *f.symbol_rate;
  if (f.min_be) s.mac_min_be = *f.min_be;
  if (f.max_be) s.mac_max_be = *f.max_be;
  if (f.stages) s.max_backoff_stages = *f.stages;
  if (f.beacon_slots) s.energy.beacon_slots = *f.beacon_slots;
  if (f.p_sleep) s.energy.p_sleep = *f.p_sleep;
  if (f.p_idle) s.energy.p_idle = *f.p_idle;
  if (f.p_rx) s.energy.p_rx = *f.p_rx;
  if (f.p_tx) s.energy.p_tx = *f.p_tx;
  if (f.t_sleep_to_idle) s.energy.t_sleep_to_idle = *f.t_sleep_to_idle;
  if (f.t_idle_to_rx) s.energy.t_idle_to_rx = *f.t_idle_to_rx;
  return s;
}

struct SolverFlags {
  double tolerance = 1e-9;
  int max_iterations = 10000;
  double damping = 0.5;
  double initial_tx_prob = 1e-3;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--tol", f.tolerance, "fixed-point convergence tolerance");
  cmd->add_option("--max-iter", f.max_iterations, "fixed-point iteration budget");
  cmd->add_option("--damping", f.damping, "fraction of each update step applied");
  cmd->add_option("--init-tx-prob", f.initial_tx_prob, "initial transmission probability");
}

dcmac::SolverOptions solver_options(const SolverFlags& f) {
  dcmac::SolverOptions o;
  o.tolerance = f.tolerance;
  o.max_iterations = f.max_iterations;
  o.damping = f.damping;
  o.initial_tx_prob = f.initial_tx_prob;
  return o;
}

struct SimFlags {
  std::uint64_t seed = 1;
  int intervals = 200;
  int reps = 1;
  std::string arrivals = "poisson";
  std::string buffer = "single";
  int capacity = 1;
};

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
  cmd->add_option("--seed", f.seed, "base random seed");
  cmd->add_option("--intervals", f.intervals, "beacon intervals to simulate");
  cmd->add_option("--reps", f.reps, "independent replications");
  cmd->add_option("--arrivals", f.arrivals, "arrival model: bernoulli | poisson")
      ->check(CLI::IsMember({"bernoulli", "poisson"}));
  cmd->add_option("--buffer", f.buffer, "buffer policy: single | queue")
      ->check(CLI::IsMember({"single", "queue"}));
  cmd->add_option("--capacity", f.capacity, "queue capacity (frames held, incl. in service)");
}

dcmac::ArrivalModel arrival_model(const SimFlags& f) {
  return f.arrivals == "bernoulli" ? dcmac::ArrivalModel::BernoulliPerSlot
                                   : dcmac::ArrivalModel::ExactPoisson;
}

dcmac::BufferPolicy buffer_policy(const SimFlags& f) {
  return f.buffer == "queue" ? dcmac::BufferPolicy::Queue : dcmac::BufferPolicy::SingleDrop;
}

// Writes rows as CSV or JSON; format follows --format, else the extension.
void write_rows(const std::vector<dcmac::ComparisonRow>& rows, const std::string& path,
                std::string format) {
  if (format.empty())
    format = path.size() >= 5 && path.substr(path.size() - 5) == ".json" ? "json" : "csv";
  const std::string body = format == "json" ? dcmac::to_json(rows) : dcmac::to_csv(rows);
  if (path.empty() || path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out << body;
  if (!out) throw std::invalid_argument("failed while writing output file: " + path);
}

void print_kv(const std::string& key, const std::string& value) {
  std::printf("%-28s %s\n", key.c_str(), value.c_str());
}

int do_solve(const ScenarioFlags& sf, const SolverFlags& vf, const std::string& out,
             const std::string& format) {
  const dcmac::MacScenario s = build_scenario(sf);
  const dcmac::AnalyticalPoint a = dcmac::analyze(s, solver_options(vf));
  const auto& sol = a.solution;
  const auto& rep = a.report;

  print_kv("lambda", format_g17(s.arrival_rate));
  print_kv("duty_cycle", format_g17(sol.timing.duty_cycle));
  print_kv("total_slots", std::to_string(sol.timing.total_slots));
  print_kv("inactive_slots", std::to_string(sol.timing.inactive_slots));
  print_kv("frame_slots", std::to_string(sol.timing.frame_slots));
  print_kv("arrival_prob", format_g17(sol.timing.arrival_prob));
  print_kv("defer_prob", format_g17(sol.timing.defer_prob));
  print_kv("node_tx_prob", format_g17(sol.node.node_tx_prob));
  print_kv("alpha", format_g17(sol.channel.alpha));
  print_kv("beta", format_g17(sol.channel.beta));
  print_kv("delta", format_g17(sol.channel.delta));
  print_kv("throughput_S", format_g17(rep.throughput));
  print_kv("avg_power_mw", format_g17(rep.avg_power_mw));
  print_kv("energy_per_packet_mj", format_g17(rep.energy_per_packet_mj));
  print_kv("packets_per_second_per_node", format_g17(rep.packets_per_second_per_node));
  print_kv("iterations", std::to_string(sol.iterations));
  print_kv("residual", format_g17(sol.residual));
  print_kv("clamped", sol.clamped ? "true" : "false");
  print_kv("fixed_point_brackets", std::to_string(sol.residual_brackets.size()));
  if (sol.residual_brackets.size() > 1)
    std::cerr << "warning: multiple self-consistent operating points detected\n";

  if (!out.empty()) write_rows({dcmac::run_solve_row(s, solver_options(vf))}, out, format);
  return 0;
}

int do_simulate(const ScenarioFlags& sf, const SimFlags& mf, const std::string& out,
                const std::string& format) {
  const dcmac::MacScenario s = build_scenario(sf);
  if (mf.reps < 1) throw std::invalid_argument("--reps must be at least 1");
  if (mf.intervals < 1) throw std::invalid_argument("--intervals must be at least 1");

  // Aggregate through the sweep machinery so --out rows match sweep output.
  dcmac::SweepGrid grid;
  grid.lambda_values = {s.arrival_rate};
  grid.superframe_orders = {s.superframe_order};
  grid.replications = mf.reps;
  dcmac::SweepOptions so;
  so.horizon_beacon_intervals = mf.intervals;
  so.seed = mf.seed;
  so.arrival_model = arrival_model(mf);
  so.buffer_policy = buffer_policy(mf);
  so.queue_capacity = mf.capacity;
  so.jobs = 1;
  const std::vector<dcmac::ComparisonRow> rows =
      dcmac::run_sweep(s, grid, dcmac::SweepMode::Simulate, so);
  if (!rows[0].error.empty()) throw std::invalid_argument(rows[0].error);

  // Detailed counters of the first replication (the same seed the sweep used).
  dcmac::SimScenario ss;
  ss.mac = s;
  ss.horizon_beacon_intervals = mf.intervals;
  ss.seed = dcmac::derive_seed(dcmac::derive_seed(mf.seed, 0), 0);
  ss.arrival_model = arrival_model(mf);
  ss.buffer_policy = buffer_policy(mf);
  ss.queue_capacity = mf.capacity;
  const dcmac::SimStats st = dcmac::simulate(ss);

  print_kv("slots_total", std::to_string(st.slots_total));
  print_kv("packets_arrived", std::to_string(st.packets_arrived));
  print_kv("packets_delivered", std::to_string(st.packets_delivered));
  print_kv("packets_collided", std::to_string(st.packets_collided));
  print_kv("packets_dropped_csma", std::to_string(st.packets_dropped_csma));
  print_kv("packets_dropped_buffer", std::to_string(st.packets_dropped_buffer));
  print_kv("packets_deferred", std::to_string(st.packets_deferred));
  print_kv("slots_sleep", std::to_string(st.per_state_slots.sleep));
  print_kv("slots_idle", std::to_string(st.per_state_slots.idle));
  print_kv("slots_backoff", std::to_string(st.per_state_slots.backoff));
  print_kv("slots_cca", std::to_string(st.per_state_slots.cca));
  print_kv("slots_tx", std::to_string(st.per_state_slots.tx));
  print_kv("slots_beacon", std::to_string(st.per_state_slots.beacon));
  print_kv("sleep_to_idle_events", std::to_string(st.sleep_to_idle_events));
  print_kv("idle_to_rx_events", std::to_string(st.idle_to_rx_events));
  print_kv("throughput_S(rep 0)", format_g17(st.throughput_S));
  print_kv("batch_stderr(rep 0)", format_g17(st.throughput_stderr));
  print_kv("energy_total_mj(rep 0)", format_g17(st.energy_total_mj));
  print_kv("energy_per_packet_mj(rep 0)", format_g17(st.energy_per_packet_mj));
  print_kv("reps", std::to_string(mf.reps));
  print_kv("S_sim_mean", format_g17(rows[0].s_sim_mean.value()));
  print_kv("S_sim_stderr", format_g17(rows[0].s_sim_stderr.value()));
  print_kv("epp_sim_mean_mj", format_g17(rows[0].epp_sim_mean.value()));

  if (!out.empty()) write_rows(rows, out, format);
  return 0;
}

int do_sweep(const ScenarioFlags& sf, const SolverFlags& vf, const SimFlags& mf,
             std::vector<double> lambdas, std::vector<int> so_list, const std::string& mode,
             int jobs, const std::string& out, const std::string& format) {
  const dcmac::MacScenario s = build_scenario(sf);
  if (lambdas.empty()) throw std::invalid_argument("--lambdas must list at least one rate");
  if (so_list.empty()) so_list = {s.superframe_order};

  dcmac::SweepGrid grid;
  grid.lambda_values = std::move(lambdas);
  grid.superframe_orders = std::move(so_list);
  grid.replications = mf.reps;

  dcmac::SweepOptions so;
  so.solver = solver_options(vf);
  so.horizon_beacon_intervals = mf.intervals;
  so.seed = mf.seed;
  so.arrival_model = arrival_model(mf);
  so.buffer_policy = buffer_policy(mf);
  so.queue_capacity = mf.capacity;
  so.jobs = jobs;

  const dcmac::SweepMode m = mode == "analytical" ? dcmac::SweepMode::Analytical
                             : mode == "simulate" ? dcmac::SweepMode::Simulate
                                                  : dcmac::SweepMode::Both;
  const std::vector<dcmac::ComparisonRow> rows = dcmac::run_sweep(s, grid, m, so);

  bool failures = false;
  for (const dcmac::ComparisonRow& r : rows) {
    if (r.error.empty()) continue;
    failures = true;
    std::cerr << "row lambda=" << format_g17(r.lambda)
              << " duty=" << format_g17(r.duty_cycle) << ": " << r.error << "\n";
  }
  write_rows(rows, out, format);
  return failures ? 1 : 0;
}

int do_compare(const std::string& in_path, bool check_trends_flag) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open input file: " + in_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::vector<dcmac::ComparisonRow> rows = dcmac::parse_csv(buf.str());
  print_kv("rows", std::to_string(rows.size()));

  double worst = 0.0;
  bool any_rel = false;
  for (const dcmac::ComparisonRow& r : rows) {
    if (r.rel_error_s) {
      any_rel = true;
      worst = std::max(worst, *r.rel_error_s);
    }
  }
  if (any_rel) print_kv("max_rel_error_S", format_g17(worst));

  if (!check_trends_flag) return 0;
  const dcmac::TrendCheck tc = dcmac::check_trends(rows);
  print_kv("throughput_trend", tc.throughput_ok ? "ok" : "violated");
  print_kv("energy_trend", tc.energy_ok ? "ok" : "violated");
  if (!(tc.throughput_ok && tc.energy_ok)) {
    std::cerr << tc.detail;
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytical model and slot-level simulator for duty-cycled slotted CSMA/CA"};
  app.require_subcommand(1);

  ScenarioFlags sf;
  SolverFlags vf;
  SimFlags mf;
  std::string out, format;
  std::vector<double> lambdas;
  std::vector<int> so_list;
  std::string mode = "both";
  int jobs = 0;
  std::string compare_in;
  bool check_trends_flag = false;

  CLI::App* solve = app.add_subcommand("solve", "analytical operating point for one scenario");
  add_scenario_flags(solve, sf);
  add_solver_flags(solve, vf);
  solve->add_option("--out", out, "write the result row to a CSV/JSON file");
  solve->add_option("--format", format, "output format: csv | json")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI::App* simulate = app.add_subcommand("simulate", "slot-level simulation of one scenario");
  add_scenario_flags(simulate, sf);
  add_sim_flags(simulate, mf);
  simulate->add_option("--out", out, "write the aggregate row to a CSV/JSON file");
  simulate->add_option("--format", format, "output format: csv | json")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI::App* sweep = app.add_subcommand("sweep", "grid sweep over arrival rate and duty cycle");
  add_scenario_flags(sweep, sf);
  add_solver_flags(sweep, vf);
  add_sim_flags(sweep, mf);
  sweep->add_option("--lambdas", lambdas, "arrival rates to sweep (frames/s)")
      ->delimiter(',')
      ->required();
  sweep->add_option("--so-list", so_list, "superframe orders to sweep")->delimiter(',');
  sweep->add_option("--mode", mode, "columns to produce: analytical | simulate | both")
      ->check(CLI::IsMember({"analytical", "simulate", "both"}));
  sweep->add_option("--jobs", jobs, "worker threads (0 = hardware concurrency)");
  sweep->add_option("--out", out, "output file ('-' or empty = stdout)");
  sweep->add_option("--format", format, "output format: csv | json")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI::App* compare = app.add_subcommand("compare", "inspect a sweep CSV and check trends");
  compare->add_option("--in", compare_in, "sweep CSV file to read")->required();
  compare->add_flag("--check-trends", check_trends_flag,
                    "fail unless duty-cycle trends hold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help and version exit cleanly; bad usage is 2
  }

  const auto guarded = [&](auto&& body) {
    try {
      return body();
    } catch (const dcmac::FixedPointError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 1;
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::domain_error& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  };

  if (solve->parsed()) return guarded([&] { return do_solve(sf, vf, out, format); });
  if (simulate->parsed()) return guarded([&] { return do_simulate(sf, mf, out, format); });
  if (sweep->parsed())
    return guarded(
        [&] { return do_sweep(sf, vf, mf, lambdas, so_list, mode, jobs, out, format); });
  if (compare->parsed())
    return guarded([&] { return do_compare(compare_in, check_trends_flag); });
  return 2;
}
