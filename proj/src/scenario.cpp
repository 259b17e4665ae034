#include "dcmac/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dcmac {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(value, &pos);
  } catch (const std::exception&) {
    fail("config key '" + key + "': cannot parse number from '" + value + "'");
  }
  if (pos != value.size()) fail("config key '" + key + "': trailing characters in '" + value + "'");
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &pos);
  } catch (const std::exception&) {
    fail("config key '" + key + "': cannot parse integer from '" + value + "'");
  }
  if (pos != value.size()) fail("config key '" + key + "': expected an integer, got '" + value + "'");
  if (out < -(1LL << 31) || out > (1LL << 31)) fail("config key '" + key + "': integer out of range");
  return static_cast<int>(out);
}

// Tries to consume one energy key; returns false if the key is not an
// energy field.
bool apply_one_energy_kv(const std::string& key, const std::string& value, EnergyProfile& e) {
  if (key == "p_sleep") e.p_sleep = parse_double(key, value);
  else if (key == "p_idle") e.p_idle = parse_double(key, value);
  else if (key == "p_rx") e.p_rx = parse_double(key, value);
  else if (key == "p_tx") e.p_tx = parse_double(key, value);
  else if (key == "t_sleep_to_idle") e.t_sleep_to_idle = parse_double(key, value);
  else if (key == "t_idle_to_rx") e.t_idle_to_rx = parse_double(key, value);
  else if (key == "beacon_slots") e.beacon_slots = parse_int(key, value);
  else return false;
  return true;
}

}  // namespace

void validate(const MacScenario& s) {
  require(s.n_nodes >= 1, "n_nodes must be at least 1");
  require(s.arrival_rate >= 0, "arrival_rate must be non-negative");
  require(s.beacon_order >= 0 && s.beacon_order <= kMaxOrder, "beacon_order must be in [0, 14]");
  require(s.superframe_order >= 0, "superframe_order must be non-negative");
  require(s.superframe_order <= s.beacon_order, "superframe_order must not exceed beacon_order");
  require(s.payload_bytes >= 0, "payload_bytes must be non-negative");
  require(s.header_bytes >= 0, "header_bytes must be non-negative");
  require(s.payload_bytes + s.header_bytes >= 1, "frame must carry at least one byte");
  require(s.phy_rate > 0, "phy_rate must be positive");
  require(s.symbol_rate > 0, "symbol_rate must be positive");
  require(s.mac_min_be >= 0, "mac_min_be must be non-negative");
  require(s.mac_max_be >= s.mac_min_be, "mac_max_be must be at least mac_min_be");
  require(s.mac_max_be <= 30, "mac_max_be is unreasonably large");
  require(s.max_backoff_stages >= 1, "max_backoff_stages must be at least 1");

  const EnergyProfile& e = s.energy;
  require(e.p_sleep >= 0 && e.p_idle >= 0 && e.p_rx >= 0 && e.p_tx >= 0,
          "radio powers must be non-negative");
  require(e.p_sleep <= e.p_idle, "p_sleep must not exceed p_idle");
  require(e.p_idle <= e.p_rx, "p_idle must not exceed p_rx");
  require(e.t_sleep_to_idle >= 0 && e.t_idle_to_rx >= 0,
          "transition times must be non-negative");
  require(e.beacon_slots >= 0, "beacon_slots must be non-negative");
}

TimingDerivation derive_timing(const MacScenario& s) {
  validate(s);

  TimingDerivation t;
  t.slot_seconds = kSymbolsPerBackoffSlot / s.symbol_rate;
  t.total_slots = kBaseSuperframeSlots << s.beacon_order;
  const int active = kBaseSuperframeSlots << s.superframe_order;
  t.inactive_slots = t.total_slots - active;
  t.duty_cycle = std::ldexp(1.0, s.superframe_order - s.beacon_order);

  // Frame air time in slots, rounded up. The small guard keeps an exact
  // integer ratio from ticking over to the next slot via rounding noise.
  const double frame_bits = 8.0 * (s.payload_bytes + s.header_bytes);
  const double slots_exact = frame_bits / s.phy_rate / t.slot_seconds;
  t.frame_slots = std::max(1, static_cast<int>(std::ceil(slots_exact - 1e-9)));

  require(t.frame_slots + 2 < active,
          "frame plus channel assessment must fit inside one active period");

  t.arrival_prob = arrival_probability(s.arrival_rate, t);
  t.defer_prob = deferral_probability(t);
  return t;
}

double arrival_probability(double arrival_rate, const TimingDerivation& t) {
  if (arrival_rate < 0) fail("arrival_rate must be non-negative");
  return std::min(1.0, arrival_rate * t.slot_seconds);
}

double deferral_probability(int inactive_slots, int frame_slots, int total_slots) {
  require(total_slots >= 1, "total_slots must be positive");
  require(inactive_slots >= 0, "inactive_slots must be non-negative");
  require(frame_slots >= 1, "frame_slots must be positive");
  require(inactive_slots + frame_slots + 2 <= total_slots,
          "frame plus channel assessment must fit inside one active period");
  return static_cast<double>(inactive_slots + frame_slots + 2) / total_slots;
}

double deferral_probability(const TimingDerivation& t) {
  return deferral_probability(t.inactive_slots, t.frame_slots, t.total_slots);
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);

  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      fail(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    if (kv.count(key)) fail(path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

void apply_scenario_kv(const std::map<std::string, std::string>& kv, MacScenario& s) {
  for (const auto& [key, value] : kv) {
    if (key == "n_nodes") s.n_nodes = parse_int(key, value);
    else if (key == "arrival_rate") s.arrival_rate = parse_double(key, value);
    else if (key == "beacon_order") s.beacon_order = parse_int(key, value);
    else if (key == "superframe_order") s.superframe_order = parse_int(key, value);
    else if (key == "payload_bytes") s.payload_bytes = parse_int(key, value);
    else if (key == "header_bytes") s.header_bytes = parse_int(key, value);
    else if (key == "phy_rate") s.phy_rate = parse_double(key, value);
    else if (key == "symbol_rate") s.symbol_rate = parse_double(key, value);
    else if (key == "mac_min_be") s.mac_min_be = parse_int(key, value);
    else if (key == "mac_max_be") s.mac_max_be = parse_int(key, value);
    else if (key == "max_backoff_stages") s.max_backoff_stages = parse_int(key, value);
    else if (!apply_one_energy_kv(key, value, s.energy))
      fail("unknown config key '" + key + "'");
  }
}

void apply_energy_kv(const std::map<std::string, std::string>& kv, EnergyProfile& e) {
  for (const auto& [key, value] : kv) {
    if (!apply_one_energy_kv(key, value, e)) fail("unknown energy profile key '" + key + "'");
  }
}

MacScenario load_scenario(const std::string& path) {
  MacScenario s;
  apply_scenario_kv(parse_kv_file(path), s);
  return s;
}

EnergyProfile load_energy_profile(const std::string& path) {
  EnergyProfile e;
  apply_energy_kv(parse_kv_file(path), e);
  return e;
}

}  // namespace dcmac
