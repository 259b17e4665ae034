#pragma once

#include <Eigen/Dense>

#include <vector>

namespace dcmac {

// Inputs of the per-node discrete-time chain. Channel behaviour enters only
// through two probabilities: the chance a slot is sensed idle, and the chance
// it is sensed idle given the previous slot was idle.
struct NodeChainParams {
  double arrival_prob = 0.0;   // new frame appears in a slot
  double defer_prob = 0.0;     // attempt is pushed to the next active period
  double chan_idle = 1.0;      // first assessment slot sensed idle
  double chan_idle_given_idle = 1.0;  // second assessment slot idle given the first was
  std::vector<double> backoff_sense_probs;  // per-stage chance backoff expires this slot
  int frame_slots = 1;
  double resume_prob = 1.0;    // deferred frame resumes contention in a slot
};

// Index map over the expanded chain. One state per occupied slot:
//   idle, deferred, backoff[stage], assess[stage][step], transmit[slot].
class NodeStateLayout {
 public:
  NodeStateLayout(int stages, int frame_slots);

  int idle() const { return 0; }
  int deferred() const { return 1; }
  int backoff(int stage) const;        // stage in [1, stages]
  int assess(int stage, int step) const;  // step in {1, 2}
  int transmit(int slot) const;        // slot in [1, frame_slots]
  int stages() const { return stages_; }
  int frame_slots() const { return frame_slots_; }
  int size() const { return 2 + 3 * stages_ + frame_slots_; }

 private:
  int stages_;
  int frame_slots_;
};

struct NodeChainSolution {
  NodeChainParams params;
  Eigen::VectorXd pi;          // stationary occupancy, indexed by NodeStateLayout
  double node_tx_prob = 0.0;   // chance a node starts transmitting in a slot

  NodeStateLayout layout() const {
    return NodeStateLayout(static_cast<int>(params.backoff_sense_probs.size()),
                           params.frame_slots);
  }
};

// Per-stage geometric decrement probabilities matching the mean residual of
// a uniform backoff draw over [0, 2^BE - 1]: q = 2 / (window + 1), with BE
// growing from min_be and capping at max_be.
std::vector<double> geometric_backoff_params(int min_be, int max_be, int stages);

// Geometric leave probability for the deferred state, matching a mean hold of
// (inactive_slots + frame_slots + 2) / 2 slots.
double deferred_resume_prob(int inactive_slots, int frame_slots);

// Row-stochastic transition matrix of the expanded chain.
Eigen::MatrixXd build_node_chain(const NodeChainParams& params);

// Stationary row vector of a row-stochastic matrix via a direct linear solve
// (one balance equation replaced by normalisation). Throws on malformed or
// numerically singular input.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& m);

// Per-slot transmission start probability: mass in the final assessment slot
// that goes on to find the channel idle.
double node_tx_probability(const Eigen::VectorXd& pi, const NodeStateLayout& layout,
                           double chan_idle_given_idle);

// Builds, solves and packages the chain. arrival_prob == 0 short-circuits to
// the all-idle distribution (the chain is reducible there).
NodeChainSolution solve_node_chain(const NodeChainParams& params);

}  // namespace dcmac
