#pragma once

#include <map>
#include <string>

namespace dcmac {

// 2.4 GHz O-QPSK PHY timing: one backoff slot spans 20 symbols and the base
// superframe spans 48 backoff slots. Orders scale both by powers of two.
inline constexpr int kSymbolsPerBackoffSlot = 20;
inline constexpr int kBaseSuperframeSlots = 48;
inline constexpr int kMaxOrder = 14;

// Transceiver profile. Powers are milliwatts; transition times are the
// seconds spent waking the radio (sleep -> idle, once per beacon interval)
// and ramping the receiver (idle -> rx, once per clear-channel assessment
// pair). beacon_slots is the slice of each active period spent receiving
// the coordinator beacon.
struct EnergyProfile {
  double p_sleep = 1.0;
  double p_idle = 1.0;
  double p_rx = 1.0;
  double p_tx = 1.0;
  double t_sleep_to_idle = 0.0;
  double t_idle_to_rx = 0.0;
  int beacon_slots = 2;
};

// One network configuration: n_nodes identical uplink devices around a
// single coordinator, beacon-enabled slotted CSMA/CA, fixed frame size,
// Poisson frame arrivals per node.
struct MacScenario {
  int n_nodes = 10;
  double arrival_rate = 0.0;  // frames per second per node
  int beacon_order = 5;
  int superframe_order = 5;
  int payload_bytes = 87;
  int header_bytes = 13;  // MAC + PHY overhead on air
  double phy_rate = 250000.0;    // bit/s
  double symbol_rate = 62500.0;  // symbol/s
  int mac_min_be = 3;
  int mac_max_be = 5;
  int max_backoff_stages = 5;
  EnergyProfile energy;
};

// Slot bookkeeping derived from a scenario. All counts are backoff slots.
// duty_cycle * total_slots equals the active slot count exactly because both
// orders are powers of two.
struct TimingDerivation {
  double slot_seconds = 0.0;
  int total_slots = 0;    // beacon interval length
  int inactive_slots = 0;
  int frame_slots = 0;    // slots one frame occupies on air
  double duty_cycle = 1.0;
  double arrival_prob = 0.0;  // per-slot arrival probability
  double defer_prob = 0.0;    // frame cannot finish in the current active period

  int active_slots() const { return total_slots - inactive_slots; }
};

// Throws std::invalid_argument describing the first violated constraint.
void validate(const MacScenario& s);

// Validates, then derives slot timing. Rejects frames that cannot fit in one
// active period (frame_slots + 2 assessment slots must fit).
TimingDerivation derive_timing(const MacScenario& s);

// Probability of at least one arrival in a slot, saturating at 1.
double arrival_probability(double arrival_rate, const TimingDerivation& t);

// Probability an arrival or retry must be held to the next active period:
// (inactive_slots + frame_slots + 2) / total_slots.
double deferral_probability(int inactive_slots, int frame_slots, int total_slots);
double deferral_probability(const TimingDerivation& t);

// Flat "key = value" configuration files. Keys are exactly the MacScenario /
// EnergyProfile field names; '#' starts a comment. Scenario files may also
// carry energy keys. Unknown keys and malformed numbers are errors.
std::map<std::string, std::string> parse_kv_file(const std::string& path);
void apply_scenario_kv(const std::map<std::string, std::string>& kv, MacScenario& s);
void apply_energy_kv(const std::map<std::string, std::string>& kv, EnergyProfile& e);
MacScenario load_scenario(const std::string& path);
EnergyProfile load_energy_profile(const std::string& path);

}  // namespace dcmac
