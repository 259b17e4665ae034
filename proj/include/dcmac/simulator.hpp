#pragma once

#include "dcmac/scenario.hpp"

#include <cstdint>
#include <vector>

namespace dcmac {

enum class ArrivalModel {
  BernoulliPerSlot,  // at most one arrival per slot, probability arrival_prob
  ExactPoisson,      // exponential inter-arrival times binned into slots
};

enum class BufferPolicy {
  SingleDrop,  // a node holds one frame; arrivals while busy are lost
  Queue,       // arrivals wait, up to queue_capacity frames held in total
};

struct SimScenario {
  MacScenario mac;
  int horizon_beacon_intervals = 200;
  std::uint64_t seed = 1;
  ArrivalModel arrival_model = ArrivalModel::ExactPoisson;
  BufferPolicy buffer_policy = BufferPolicy::SingleDrop;
  int queue_capacity = 1;  // only read under BufferPolicy::Queue
};

// How many slots each radio condition occupied, summed over nodes. Every
// node is in exactly one condition per slot, so total() is n_nodes times the
// simulated slot count.
struct RadioSlotCounts {
  std::uint64_t sleep = 0;
  std::uint64_t idle = 0;
  std::uint64_t backoff = 0;
  std::uint64_t cca = 0;
  std::uint64_t tx = 0;
  std::uint64_t beacon = 0;

  std::uint64_t total() const { return sleep + idle + backoff + cca + tx + beacon; }
};

struct IntervalRecord {
  int interval = 0;
  double throughput = 0.0;  // payload slots delivered in this interval / interval length
  std::uint64_t collisions = 0;
  double energy_mj = 0.0;  // all nodes
};

struct SimStats {
  std::uint64_t slots_total = 0;  // slots simulated (per node)

  std::uint64_t packets_arrived = 0;
  std::uint64_t packets_delivered = 0;
  std::uint64_t packets_collided = 0;
  std::uint64_t packets_dropped_csma = 0;    // ran out of backoff stages
  std::uint64_t packets_dropped_buffer = 0;  // arrived at a full buffer
  std::uint64_t packets_deferred = 0;        // held to the next active period

  std::uint64_t slots_success_payload = 0;  // channel slots carrying clean frames
  RadioSlotCounts per_state_slots;
  std::uint64_t sleep_to_idle_events = 0;  // radio wake-ups (one per interval with sleep)
  std::uint64_t idle_to_rx_events = 0;     // receiver ramps (one per assessment pair)

  double throughput_S = 0.0;       // slots_success_payload / slots_total
  double throughput_stderr = 0.0;  // batch standard error over beacon intervals
  double energy_total_mj = 0.0;    // all nodes, slot energies plus transition charges
  double energy_per_packet_mj = 0.0;  // infinite when nothing was delivered

  std::vector<IntervalRecord> intervals;
  std::vector<std::uint64_t> per_node_delivered;
};

// Slot-by-slot simulation of the full network. Deterministic for a given
// scenario and seed; each node draws from its own generator.
SimStats simulate(const SimScenario& s);

// Standard error of the mean of per-interval values (sample standard
// deviation over sqrt(count)). Requires at least two values.
double batch_confidence(const std::vector<double>& per_interval_values);

// Deterministic sub-seed for a named stream of a base seed; used to give
// every replication its own independent generator state.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace dcmac
