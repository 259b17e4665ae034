#pragma once

#include "dcmac/fixed_point.hpp"
#include "dcmac/node_chain.hpp"
#include "dcmac/scenario.hpp"

namespace dcmac {

// Fraction of slots the network spends delivering clean payload: a tagged
// pair of idle slots breeds a clean frame with probability beta, and each
// clean frame occupies frame_slots slots of its renewal cycle.
double throughput(double alpha, double beta, int frame_slots);

// Long-run share of a node's time in each radio condition. The first six
// cover every slot; the two transition entries are overlap corrections
// (slot-equivalents of wake-up and receiver ramp time) accounted on top.
struct RadioFractions {
  double f_idle = 0.0;
  double f_sleep = 0.0;
  double f_backoff = 0.0;
  double f_cca = 0.0;
  double f_tx = 0.0;
  double f_beacon = 0.0;
  double f_sleep_to_idle = 0.0;
  double f_idle_to_rx = 0.0;
};

RadioFractions state_fractions(const NodeChainSolution& node, const TimingDerivation& t,
                               const EnergyProfile& e);

// Average radio power of one node in mW. Beacon reception and both
// transition corrections displace time that the plain fractions book as
// idle-at-sleep-power or backoff-at-idle-power, so they enter with
// compensating signs. Throws std::domain_error when the corrections exceed
// the idle budget (the profile is outside the model's regime).
double average_power(const RadioFractions& fr, const EnergyProfile& e);

// Network energy cost of one delivered frame in mJ: all n_nodes spend
// avg_power for the frame's share of air time. Infinite when nothing is
// delivered.
double energy_per_packet(double avg_power_mw, double throughput_s,
                         const TimingDerivation& t, int n_nodes);

struct PerformanceReport {
  double throughput = 0.0;
  RadioFractions fractions;
  double avg_power_mw = 0.0;
  double energy_per_packet_mj = 0.0;
  double packets_per_second_per_node = 0.0;
};

PerformanceReport performance_report(const MacScenario& s, const FixedPointSolution& sol);

}  // namespace dcmac
