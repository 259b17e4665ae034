#include "dcmac/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace dcmac {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Contention walks through: waiting for the next active period (Hold),
// counting down backoff (Backoff), the two assessment slots (Cca1/Cca2),
// then the frame itself (Tx). Cca1 doubles as "assessment pending" while
// frozen outside the contention access period.
enum class Phase { Idle, Hold, Backoff, Cca1, Cca2, Tx };

struct Node {
  Phase phase = Phase::Idle;
  bool hold_resumes_assessment = false;
  int backlog = 0;  // frames queued behind the one in service
  int counter = 0;
  int attempt = 0;
  int be = 0;
  int tx_remaining = 0;
  bool tx_collided = false;
  double next_arrival = 0.0;  // continuous time, slot units
  std::uint64_t delivered = 0;
  std::mt19937_64 rng;
};

}  // namespace

SimStats simulate(const SimScenario& s) {
  const TimingDerivation t = derive_timing(s.mac);
  require(s.horizon_beacon_intervals >= 1, "horizon must cover at least one beacon interval");
  if (s.buffer_policy == BufferPolicy::Queue)
    require(s.queue_capacity >= 1, "queue_capacity must be at least 1");

  const int T = t.total_slots;
  const int active = t.active_slots();
  const int beacon = s.mac.energy.beacon_slots;
  const int L = t.frame_slots;
  require(beacon + L + 2 <= active,
          "beacon plus frame plus assessment must fit inside one active period");

  const int stages = s.mac.max_backoff_stages;
  const int min_be = s.mac.mac_min_be;
  const int max_be = s.mac.mac_max_be;
  const double p_arr = t.arrival_prob;
  const double rate_per_slot = s.mac.arrival_rate * t.slot_seconds;

  const EnergyProfile& e = s.mac.energy;
  const double e_sleep = e.p_sleep * t.slot_seconds;  // mJ per slot
  const double e_idle = e.p_idle * t.slot_seconds;
  const double e_rx = e.p_rx * t.slot_seconds;
  const double e_tx = e.p_tx * t.slot_seconds;
  const double e_wake = e.p_idle * e.t_sleep_to_idle;
  const double e_ramp = e.p_rx * e.t_idle_to_rx;

  SimStats out;
  out.slots_total = static_cast<std::uint64_t>(s.horizon_beacon_intervals) * T;
  out.intervals.reserve(s.horizon_beacon_intervals);

  std::vector<Node> nodes(s.mac.n_nodes);
  std::exponential_distribution<double> inter_arrival(rate_per_slot > 0 ? rate_per_slot : 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].rng.seed(splitmix64(s.seed ^ splitmix64(0x5EED00 + i)));
    nodes[i].next_arrival = rate_per_slot > 0 ? inter_arrival(nodes[i].rng)
                                              : std::numeric_limits<double>::infinity();
  }

  std::uint64_t interval_success = 0;
  std::uint64_t interval_collisions_base = 0;
  double interval_energy_base = 0.0;

  for (std::uint64_t slot = 0; slot < out.slots_total; ++slot) {
    const int s_in = static_cast<int>(slot % T);
    const bool is_active = s_in < active;
    const bool is_beacon = s_in < beacon;
    const bool is_cap = is_active && !is_beacon;
    const int remaining_active = is_active ? active - s_in : 0;

    // Nodes wake from the inactive span to catch the beacon.
    if (s_in == 0 && t.inactive_slots > 0) {
      out.energy_total_mj += e_wake * nodes.size();
      out.sleep_to_idle_events += nodes.size();
    }

    // The channel for this slot is fixed by who is already mid-frame;
    // assessments everywhere this slot sense exactly this set.
    int tx_count = 0;
    for (const Node& n : nodes)
      if (n.phase == Phase::Tx) ++tx_count;
    if (tx_count >= 2)
      for (Node& n : nodes)
        if (n.phase == Phase::Tx) n.tx_collided = true;
    const bool channel_busy = tx_count >= 1;

    const auto book_sleep = [&] { ++out.per_state_slots.sleep; out.energy_total_mj += e_sleep; };
    const auto book_idle = [&] { ++out.per_state_slots.idle; out.energy_total_mj += e_idle; };
    const auto book_backoff = [&] { ++out.per_state_slots.backoff; out.energy_total_mj += e_idle; };
    const auto book_cca = [&] { ++out.per_state_slots.cca; out.energy_total_mj += e_rx; };
    const auto book_tx = [&] { ++out.per_state_slots.tx; out.energy_total_mj += e_tx; };
    const auto book_beacon = [&] { ++out.per_state_slots.beacon; out.energy_total_mj += e_rx; };
    const auto book_parked = [&] {
      if (is_beacon) book_beacon();
      else if (is_active) book_idle();
      else book_sleep();
    };

    const auto fits_now = [&] { return is_active && remaining_active >= L + 2; };

    const auto draw_backoff = [&](Node& n) {
      n.counter = std::uniform_int_distribution<int>(0, (1 << n.be) - 1)(n.rng);
    };

    const auto start_frame = [&](Node& n) {
      if (fits_now()) {
        n.attempt = 0;
        n.be = min_be;
        draw_backoff(n);
        n.phase = Phase::Backoff;
      } else {
        ++out.packets_deferred;
        n.phase = Phase::Hold;
        n.hold_resumes_assessment = false;
      }
    };

    const auto complete_frame = [&](Node& n) {
      n.phase = Phase::Idle;
      n.tx_collided = false;
      if (n.backlog > 0) {
        --n.backlog;
        start_frame(n);
      }
    };

    const auto assessment_failed = [&](Node& n) {
      if (++n.attempt >= stages) {
        ++out.packets_dropped_csma;
        complete_frame(n);
      } else {
        n.be = std::min(n.be + 1, max_be);
        draw_backoff(n);
        n.phase = Phase::Backoff;
      }
    };

    // One contention-access backoff slot: the final countdown slot hands
    // over to the assessment pipeline starting next slot.
    const auto countdown = [&](Node& n) {
      book_backoff();
      if (n.counter == 0) n.phase = Phase::Cca1;
      else --n.counter;
    };

    const auto begin_assessment = [&](Node& n) {
      book_cca();
      out.energy_total_mj += e_ramp;  // receiver ramps up for the pair
      ++out.idle_to_rx_events;
      if (channel_busy) assessment_failed(n);
      else n.phase = Phase::Cca2;
    };

    for (Node& n : nodes) {
      switch (n.phase) {
        case Phase::Tx: {
          if (!is_cap)
            throw std::logic_error("transmission outside the contention access period");
          book_tx();
          if (--n.tx_remaining == 0) {
            if (n.tx_collided) {
              ++out.packets_collided;
            } else {
              ++out.packets_delivered;
              ++n.delivered;
              out.slots_success_payload += L;
              interval_success += L;
            }
            complete_frame(n);
          }
          break;
        }
        case Phase::Cca2: {
          book_cca();
          if (channel_busy) {
            assessment_failed(n);
          } else {
            n.phase = Phase::Tx;
            n.tx_remaining = L;
            n.tx_collided = false;
          }
          break;
        }
        case Phase::Cca1: {
          if (!is_cap) {
            book_parked();  // frozen until the contention access period
          } else if (!fits_now()) {
            ++out.packets_deferred;
            n.phase = Phase::Hold;
            n.hold_resumes_assessment = true;
            book_idle();
          } else {
            begin_assessment(n);
          }
          break;
        }
        case Phase::Backoff: {
          if (is_cap) countdown(n);
          else book_parked();
          break;
        }
        case Phase::Hold: {
          if (is_cap && s_in == beacon) {
            // Fresh active period: held work resumes where it paused.
            if (n.hold_resumes_assessment) {
              n.hold_resumes_assessment = false;
              begin_assessment(n);
            } else {
              n.attempt = 0;
              n.be = min_be;
              draw_backoff(n);
              n.phase = Phase::Backoff;
              countdown(n);
            }
          } else {
            book_parked();
          }
          break;
        }
        case Phase::Idle: {
          book_parked();
          break;
        }
      }
    }

    // Arrivals land after the slot's MAC activity; service starts next slot.
    for (Node& n : nodes) {
      const auto accept_arrival = [&] {
        ++out.packets_arrived;
        if (n.phase == Phase::Idle) {
          start_frame(n);
        } else {
          const int capacity = s.buffer_policy == BufferPolicy::Queue ? s.queue_capacity : 1;
          if (1 + n.backlog < capacity) ++n.backlog;
          else ++out.packets_dropped_buffer;
        }
      };
      if (s.arrival_model == ArrivalModel::BernoulliPerSlot) {
        if (p_arr > 0.0 && u01(n.rng) < p_arr) accept_arrival();
      } else {
        while (n.next_arrival < slot + 1.0) {
          accept_arrival();
          n.next_arrival += inter_arrival(n.rng);
        }
      }
    }

    if (s_in == T - 1) {
      IntervalRecord rec;
      rec.interval = static_cast<int>(slot / T);
      rec.throughput = static_cast<double>(interval_success) / T;
      rec.collisions = out.packets_collided - interval_collisions_base;
      rec.energy_mj = out.energy_total_mj - interval_energy_base;
      out.intervals.push_back(rec);
      interval_success = 0;
      interval_collisions_base = out.packets_collided;
      interval_energy_base = out.energy_total_mj;
    }
  }

  out.throughput_S = static_cast<double>(out.slots_success_payload) / out.slots_total;
  if (out.intervals.size() >= 2) {
    std::vector<double> per_interval;
    per_interval.reserve(out.intervals.size());
    for (const IntervalRecord& rec : out.intervals) per_interval.push_back(rec.throughput);
    out.throughput_stderr = batch_confidence(per_interval);
  }
  out.energy_per_packet_mj = out.packets_delivered > 0
                                 ? out.energy_total_mj / out.packets_delivered
                                 : std::numeric_limits<double>::infinity();
  out.per_node_delivered.reserve(nodes.size());
  for (const Node& n : nodes) out.per_node_delivered.push_back(n.delivered);
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream + 0xA5A5A5A5A5A5A5A5ULL));
}

double batch_confidence(const std::vector<double>& per_interval_values) {
  require(per_interval_values.size() >= 2, "need at least two batches for a standard error");
  const double n = static_cast<double>(per_interval_values.size());
  double mean = 0.0;
  for (double v : per_interval_values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : per_interval_values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace dcmac
