#include "dcmac/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dcmac {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool is_prob(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

double throughput(double alpha, double beta, int frame_slots) {
  require(is_prob(alpha) && is_prob(beta), "alpha and beta must be probabilities");
  require(alpha + beta <= 1.0 + 1e-9, "alpha + beta must not exceed 1");
  require(frame_slots >= 1, "frame_slots must be positive");
  return frame_slots * beta / (1.0 + (frame_slots + 1.0) * (1.0 - alpha));
}

RadioFractions state_fractions(const NodeChainSolution& node, const TimingDerivation& t,
                               const EnergyProfile& e) {
  const NodeStateLayout ix = node.layout();
  require(node.pi.size() == ix.size(), "occupancy vector does not match the layout");
  require(t.total_slots >= 1, "total_slots must be positive");
  require(e.beacon_slots <= t.active_slots(), "beacon cannot outlast the active period");

  RadioFractions fr;
  for (int j = 1; j <= ix.frame_slots(); ++j) fr.f_tx += node.pi(ix.transmit(j));
  for (int k = 1; k <= ix.stages(); ++k) {
    fr.f_backoff += node.pi(ix.backoff(k));
    fr.f_cca += node.pi(ix.assess(k, 1)) + node.pi(ix.assess(k, 2));
  }

  // Idle and deferred chain states put the radio to sleep during the
  // inactive span and leave it idling during the active span.
  const double parked = node.pi(ix.idle()) + node.pi(ix.deferred());
  const double inactive_share = static_cast<double>(t.inactive_slots) / t.total_slots;
  fr.f_sleep = parked * inactive_share;
  fr.f_idle = parked * (1.0 - inactive_share);

  fr.f_beacon = static_cast<double>(e.beacon_slots) / t.total_slots;

  // Transition corrections in slot-equivalents: one wake-up per beacon
  // interval (only when there is an inactive span to wake from), and one
  // receiver ramp per assessment pair entered.
  if (t.inactive_slots > 0)
    fr.f_sleep_to_idle = (e.t_sleep_to_idle / t.slot_seconds) / t.total_slots;
  double assess_entry_rate = 0.0;
  for (int k = 1; k <= ix.stages(); ++k)
    assess_entry_rate += node.params.backoff_sense_probs[k - 1] * node.pi(ix.backoff(k));
  fr.f_idle_to_rx = (e.t_idle_to_rx / t.slot_seconds) * assess_entry_rate;

  return fr;
}

double average_power(const RadioFractions& fr, const EnergyProfile& e) {
  for (double f : {fr.f_idle, fr.f_sleep, fr.f_backoff, fr.f_cca, fr.f_tx, fr.f_beacon,
                   fr.f_sleep_to_idle, fr.f_idle_to_rx})
    require(f >= 0.0 && f <= 1.0, "fractions must lie in [0, 1]");

  const double w_sleep = fr.f_idle - fr.f_beacon - fr.f_sleep_to_idle + fr.f_sleep;
  const double w_idle = fr.f_backoff - fr.f_idle_to_rx + fr.f_sleep_to_idle;
  const double w_rx = fr.f_cca + fr.f_idle_to_rx + fr.f_beacon;
  const double w_tx = fr.f_tx;

  if (w_sleep < 0.0)
    throw std::domain_error(
        "beacon and wake-up time exceed the idle budget: outside the model's regime");
  require(w_sleep + w_idle + w_rx + w_tx <= 1.0 + 1e-9, "power weights must not exceed 1");

  return w_sleep * e.p_sleep + w_idle * e.p_idle + w_rx * e.p_rx + w_tx * e.p_tx;
}

double energy_per_packet(double avg_power_mw, double throughput_s,
                         const TimingDerivation& t, int n_nodes) {
  require(avg_power_mw >= 0.0, "avg_power must be non-negative");
  require(throughput_s >= 0.0 && throughput_s <= 1.0, "throughput must lie in [0, 1]");
  require(n_nodes >= 1, "n_nodes must be at least 1");
  if (throughput_s == 0.0) return std::numeric_limits<double>::infinity();
  return n_nodes * avg_power_mw * t.frame_slots * t.slot_seconds / throughput_s;
}

PerformanceReport performance_report(const MacScenario& s, const FixedPointSolution& sol) {
  PerformanceReport r;
  r.throughput = throughput(sol.channel.alpha, sol.channel.beta, sol.timing.frame_slots);
  r.fractions = state_fractions(sol.node, sol.timing, s.energy);
  r.avg_power_mw = average_power(r.fractions, s.energy);
  r.energy_per_packet_mj = energy_per_packet(r.avg_power_mw, r.throughput, sol.timing, s.n_nodes);
  r.packets_per_second_per_node =
      r.throughput / (sol.timing.frame_slots * sol.timing.slot_seconds) / s.n_nodes;
  return r;
}

}  // namespace dcmac
