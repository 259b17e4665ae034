#pragma once

#include <Eigen/Dense>

namespace dcmac {

// What a tagged slot pair can turn into, as seen by the channel: it stays
// idle (alpha), exactly one node starts a frame (beta), or two or more
// collide (delta). The three sum to 1.
struct ChannelEventProbs {
  double alpha = 1.0;
  double beta = 0.0;
  double delta = 0.0;
};

// Channel quantities at one operating point.
struct ChannelSolution {
  double tx_given_idle_idle = 0.0;  // single node starts, given two idle slots
  double alpha = 1.0;
  double beta = 0.0;
  double delta = 0.0;
  double idle_idle = 1.0;        // slot idle and its predecessor idle
  double idle = 1.0;             // slot idle
  double idle_given_idle = 1.0;  // slot idle given its predecessor idle
  bool clamped = false;          // tx_given_idle_idle hit the [0, 1] clamp
};

// Probability a slot is idle given the previous one was, implied by the
// renewal structure of frame transmissions. Throws std::domain_error when
// idle <= 1 / (frame_slots + 1) (the value would leave [0, 1]).
double cond_idle_given_idle(double idle, int frame_slots);

// Per-node transmission start probability conditioned on two successive idle
// slots, recovered from the unconditioned rate. Clamped into [0, 1]; pass
// `clamped` to observe the clamp. Throws std::domain_error when the channel
// is too busy for the inversion ((frame_slots + 1) * idle - 1 <= 0).
double tx_given_idle_idle(double node_tx, double idle, int frame_slots,
                          bool* clamped = nullptr);

// Slot-pair outcome probabilities for n_nodes independent contenders.
ChannelEventProbs channel_event_probs(double tx_ii, int n_nodes);

// Stationary probability of an idle slot preceded by an idle slot.
double idle_idle_prob(double alpha, int frame_slots);

// Stationary probability of an idle slot (the idle-idle anchor plus the
// recovery slot after each frame).
double generic_idle_prob(double alpha, int frame_slots);

// Index map for the explicit channel renewal chain: the idle-idle anchor,
// one state per slot of a clean frame, one per slot of a collision, and one
// trailing idle slot after each kind of frame.
class ChannelChainLayout {
 public:
  explicit ChannelChainLayout(int frame_slots);

  int idle_idle() const { return 0; }
  int success(int slot) const;  // slot in [1, frame_slots]
  int failure(int slot) const;
  int idle_after_success() const { return 2 * frame_slots_ + 1; }
  int idle_after_failure() const { return 2 * frame_slots_ + 2; }
  int frame_slots() const { return frame_slots_; }
  int size() const { return 2 * frame_slots_ + 3; }

 private:
  int frame_slots_;
};

// Row-stochastic transition matrix of the explicit channel chain.
Eigen::MatrixXd build_channel_chain(const ChannelEventProbs& ev, int frame_slots);

// Stationary occupancy of the explicit chain, indexed by ChannelChainLayout.
// Slower than the closed forms but makes no renewal-cycle shortcuts, so it
// serves as an independent cross-check on them.
Eigen::VectorXd brute_force_channel_stationary(const ChannelEventProbs& ev, int frame_slots);

// Channel state consistent with a given per-node transmission start rate:
// the unique alpha solving alpha = (1 - tx_given_idle_idle(alpha))^n_nodes,
// found by bisection, with every derived probability evaluated there.
ChannelSolution solve_channel_response(double node_tx, int n_nodes, int frame_slots);

}  // namespace dcmac
