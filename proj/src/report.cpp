#include "dcmac/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dcmac {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

constexpr const char* kCsvHeader =
    "lambda,duty_cycle,S_analytical,S_sim_mean,S_sim_stderr,Eavg_analytical,"
    "epp_analytical,epp_sim_mean,epp_sim_stderr,rel_error_S";

std::string format_opt(const std::optional<double>& v) {
  return v ? format_g17(*v) : std::string();
}

std::optional<double> parse_opt(const std::string& field, int line_no) {
  if (field.empty()) return std::nullopt;
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + field.size())
    throw std::invalid_argument("line " + std::to_string(line_no) +
                                ": cannot parse number '" + field + "'");
  return v;
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / v.size();
}

ComparisonRow compute_row(const MacScenario& base, int so, double lambda,
                          std::size_t row_index, SweepMode mode, const SweepOptions& opts,
                          int replications) {
  MacScenario point = base;
  point.superframe_order = so;
  point.arrival_rate = lambda;

  ComparisonRow row;
  row.lambda = lambda;
  row.duty_cycle = std::ldexp(1.0, so - base.beacon_order);

  std::string errors;
  if (mode != SweepMode::Simulate) {
    try {
      const AnalyticalPoint a = analyze(point, opts.solver);
      row.s_analytical = a.report.throughput;
      row.eavg_analytical = a.report.avg_power_mw;
      row.epp_analytical = a.report.energy_per_packet_mj;
    } catch (const std::exception& e) {
      errors += "analytical: ";
      errors += e.what();
    }
  }

  if (mode != SweepMode::Analytical) {
    try {
      std::vector<double> s_vals, epp_vals;
      double first_batch_stderr = 0.0;
      for (int rep = 0; rep < replications; ++rep) {
        SimScenario ss;
        ss.mac = point;
        ss.horizon_beacon_intervals = opts.horizon_beacon_intervals;
        ss.seed = derive_seed(derive_seed(opts.seed, row_index), rep);
        ss.arrival_model = opts.arrival_model;
        ss.buffer_policy = opts.buffer_policy;
        ss.queue_capacity = opts.queue_capacity;
        const SimStats st = simulate(ss);
        s_vals.push_back(st.throughput_S);
        epp_vals.push_back(st.energy_per_packet_mj);
        if (rep == 0) first_batch_stderr = st.throughput_stderr;
      }
      row.s_sim_mean = mean_of(s_vals);
      row.s_sim_stderr = s_vals.size() >= 2 ? batch_confidence(s_vals) : first_batch_stderr;

      const bool any_inf =
          std::any_of(epp_vals.begin(), epp_vals.end(), [](double v) { return std::isinf(v); });
      row.epp_sim_mean = any_inf ? std::numeric_limits<double>::infinity() : mean_of(epp_vals);
      if (any_inf) row.epp_sim_stderr = std::numeric_limits<double>::infinity();
      else row.epp_sim_stderr = epp_vals.size() >= 2 ? batch_confidence(epp_vals) : 0.0;
    } catch (const std::exception& e) {
      if (!errors.empty()) errors += "; ";
      errors += "simulation: ";
      errors += e.what();
    }
  }

  if (row.s_analytical && row.s_sim_mean)
    row.rel_error_s = std::abs(*row.s_analytical - *row.s_sim_mean) /
                      std::max(*row.s_sim_mean, 1e-6);
  row.error = errors;
  return row;
}

// Per-family accessor bundle for trend checks.
struct TrendFamily {
  const char* name;
  std::optional<double> ComparisonRow::*throughput;
  std::optional<double> ComparisonRow::*epp;
};

}  // namespace

AnalyticalPoint analyze(const MacScenario& s, const SolverOptions& opts) {
  AnalyticalPoint p;
  p.solution = solve_fixed_point(s, opts);
  p.report = performance_report(s, p.solution);
  return p;
}

ComparisonRow run_solve_row(const MacScenario& s, const SolverOptions& opts) {
  const AnalyticalPoint a = analyze(s, opts);
  ComparisonRow row;
  row.lambda = s.arrival_rate;
  row.duty_cycle = a.solution.timing.duty_cycle;
  row.s_analytical = a.report.throughput;
  row.eavg_analytical = a.report.avg_power_mw;
  row.epp_analytical = a.report.energy_per_packet_mj;
  return row;
}

std::vector<ComparisonRow> run_sweep(const MacScenario& base, const SweepGrid& grid,
                                     SweepMode mode, const SweepOptions& opts) {
  require(!grid.lambda_values.empty(), "sweep needs at least one lambda value");
  require(!grid.superframe_orders.empty(), "sweep needs at least one superframe order");
  require(grid.replications >= 1, "replications must be at least 1");
  for (double l : grid.lambda_values) require(l >= 0.0, "lambda values must be non-negative");

  // Row order: duty cycle descending (higher superframe order first), then
  // lambda ascending.
  std::vector<int> orders = grid.superframe_orders;
  std::sort(orders.begin(), orders.end(), std::greater<>());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  std::vector<double> lambdas = grid.lambda_values;
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  struct Task {
    int so;
    double lambda;
  };
  std::vector<Task> tasks;
  for (int so : orders)
    for (double l : lambdas) tasks.push_back({so, l});

  std::vector<ComparisonRow> rows(tasks.size());
  const auto worker = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
      rows[i] = compute_row(base, tasks[i].so, tasks[i].lambda, i, mode, opts,
                            grid.replications);
  };

  unsigned jobs = opts.jobs > 0 ? static_cast<unsigned>(opts.jobs)
                                : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, tasks.size());

  std::atomic<std::size_t> next{0};
  if (jobs <= 1) {
    worker(next);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back([&] { worker(next); });
    for (std::thread& th : pool) th.join();
  }
  return rows;
}

std::string format_g17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const ComparisonRow& r : rows) {
    out += format_g17(r.lambda);
    out += ',';
    out += format_g17(r.duty_cycle);
    for (const auto& field : {r.s_analytical, r.s_sim_mean, r.s_sim_stderr,
                              r.eavg_analytical, r.epp_analytical, r.epp_sim_mean,
                              r.epp_sim_stderr, r.rel_error_s}) {
      out += ',';
      out += format_opt(field);
    }
    out += '\n';
  }
  return out;
}

std::vector<ComparisonRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  std::vector<ComparisonRow> rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kCsvHeader)
        throw std::invalid_argument("line 1: unexpected CSV header: " + line);
      saw_header = true;
      continue;
    }

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 10)
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": expected 10 columns, got " +
                                  std::to_string(fields.size()));

    ComparisonRow r;
    const auto lam = parse_opt(fields[0], line_no);
    const auto duty = parse_opt(fields[1], line_no);
    if (!lam || !duty)
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": lambda and duty_cycle are required");
    r.lambda = *lam;
    r.duty_cycle = *duty;
    r.s_analytical = parse_opt(fields[2], line_no);
    r.s_sim_mean = parse_opt(fields[3], line_no);
    r.s_sim_stderr = parse_opt(fields[4], line_no);
    r.eavg_analytical = parse_opt(fields[5], line_no);
    r.epp_analytical = parse_opt(fields[6], line_no);
    r.epp_sim_mean = parse_opt(fields[7], line_no);
    r.epp_sim_stderr = parse_opt(fields[8], line_no);
    r.rel_error_s = parse_opt(fields[9], line_no);
    rows.push_back(r);
  }
  if (!saw_header) throw std::invalid_argument("CSV input has no header line");
  return rows;
}

std::string to_json(const std::vector<ComparisonRow>& rows) {
  using nlohmann::json;
  const auto field = [](const std::optional<double>& v) -> json {
    if (!v) return nullptr;
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    return *v;
  };

  json arr = json::array();
  for (const ComparisonRow& r : rows) {
    json obj;
    obj["lambda"] = r.lambda;
    obj["duty_cycle"] = r.duty_cycle;
    obj["S_analytical"] = field(r.s_analytical);
    obj["S_sim_mean"] = field(r.s_sim_mean);
    obj["S_sim_stderr"] = field(r.s_sim_stderr);
    obj["Eavg_analytical"] = field(r.eavg_analytical);
    obj["epp_analytical"] = field(r.epp_analytical);
    obj["epp_sim_mean"] = field(r.epp_sim_mean);
    obj["epp_sim_stderr"] = field(r.epp_sim_stderr);
    obj["rel_error_S"] = field(r.rel_error_s);
    if (!r.error.empty()) obj["error"] = r.error;
    arr.push_back(obj);
  }
  return json{{"rows", arr}}.dump(2) + "\n";
}

TrendCheck check_trends(const std::vector<ComparisonRow>& rows) {
  require(!rows.empty(), "trend check needs at least one row");

  std::set<double, std::greater<>> duties;
  std::set<double> lambdas;
  std::map<std::pair<double, double>, const ComparisonRow*> grid;
  for (const ComparisonRow& r : rows) {
    duties.insert(r.duty_cycle);
    lambdas.insert(r.lambda);
    grid[{r.duty_cycle, r.lambda}] = &r;
  }
  for (double d : duties)
    for (double l : lambdas)
      require(grid.count({d, l}) == 1, "trend check needs a complete duty-by-lambda grid");

  TrendCheck out;
  if (duties.size() < 2) {
    out.throughput_ok = true;
    out.energy_ok = true;
    out.detail = "single duty cycle: trends hold vacuously";
    return out;
  }

  std::vector<TrendFamily> families;
  const bool has_analytical =
      std::any_of(rows.begin(), rows.end(), [](const auto& r) { return bool(r.s_analytical); });
  const bool has_sim =
      std::any_of(rows.begin(), rows.end(), [](const auto& r) { return bool(r.s_sim_mean); });
  if (has_analytical)
    families.push_back({"analytical", &ComparisonRow::s_analytical, &ComparisonRow::epp_analytical});
  if (has_sim)
    families.push_back({"simulated", &ComparisonRow::s_sim_mean, &ComparisonRow::epp_sim_mean});
  require(!families.empty(), "trend check needs throughput columns");

  const std::vector<double> duty_list(duties.begin(), duties.end());
  const double lambda_max = *lambdas.rbegin();
  const double lambda_min = *lambdas.begin();
  std::string detail;

  out.throughput_ok = true;
  out.energy_ok = true;
  for (const TrendFamily& fam : families) {
    const auto value = [&](std::optional<double> ComparisonRow::*member, double d,
                           double l) -> std::optional<double> {
      return grid.at({d, l})->*member;
    };

    // Throughput ordering at the heaviest load.
    for (std::size_t i = 0; i + 1 < duty_list.size(); ++i) {
      const auto hi = value(fam.throughput, duty_list[i], lambda_max);
      const auto lo = value(fam.throughput, duty_list[i + 1], lambda_max);
      if (!hi || !lo) {
        out.throughput_ok = false;
        detail += std::string(fam.name) + ": missing throughput at the highest lambda\n";
        break;
      }
      if (*hi < *lo) {
        out.throughput_ok = false;
        detail += std::string(fam.name) + ": throughput rises when duty cycle drops " +
                  format_g17(duty_list[i]) + " -> " + format_g17(duty_list[i + 1]) +
                  " at lambda " + format_g17(lambda_max) + "\n";
      }
    }
    {
      const auto top = value(fam.throughput, duty_list.front(), lambda_max);
      const auto bottom = value(fam.throughput, duty_list.back(), lambda_max);
      if (top && bottom && !(*top > *bottom)) {
        out.throughput_ok = false;
        detail += std::string(fam.name) +
                  ": throughput not strictly higher at the full duty cycle\n";
      }
    }

    // Energy ordering everywhere above the lightest load.
    for (double l : lambdas) {
      if (l == lambda_min) continue;
      for (std::size_t i = 0; i + 1 < duty_list.size(); ++i) {
        const auto hi = value(fam.epp, duty_list[i], l);
        const auto lo = value(fam.epp, duty_list[i + 1], l);
        if (!hi || !lo) {
          out.energy_ok = false;
          detail += std::string(fam.name) + ": missing energy per packet at lambda " +
                    format_g17(l) + "\n";
          continue;
        }
        if (*lo < *hi) {
          out.energy_ok = false;
          detail += std::string(fam.name) +
                    ": energy per packet drops when duty cycle drops " +
                    format_g17(duty_list[i]) + " -> " + format_g17(duty_list[i + 1]) +
                    " at lambda " + format_g17(l) + "\n";
        }
      }
    }
  }

  out.detail = detail.empty() ? "all duty-cycle trends hold" : detail;
  return out;
}

}  // namespace dcmac
