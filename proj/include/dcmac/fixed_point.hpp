#pragma once

#include "dcmac/channel.hpp"
#include "dcmac/node_chain.hpp"
#include "dcmac/scenario.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dcmac {

struct SolverOptions {
  double tolerance = 1e-9;      // |update(p) - p| at convergence
  int max_iterations = 10000;
  double damping = 0.5;         // fraction of each update step applied
  double initial_tx_prob = 1e-3;
};

// Everything the coupled update map needs, precomputed from a scenario.
struct ModelInputs {
  int n_nodes = 1;
  TimingDerivation timing;
  std::vector<double> backoff_sense_probs;
  double resume_prob = 1.0;
};

ModelInputs model_inputs(const MacScenario& s);

// One sweep of the coupled system: channel state consistent with the given
// per-node transmission rate, then the node chain under that channel.
struct UpdateResult {
  double tx_prob = 0.0;  // transmission rate the node chain answers with
  ChannelSolution channel;
  NodeChainSolution node;
};

UpdateResult tx_prob_update(const ModelInputs& in, double tx_prob);

// Thrown when damped iteration fails to converge; carries the residual
// history for diagnosis.
class FixedPointError : public std::runtime_error {
 public:
  FixedPointError(const std::string& msg, std::vector<double> residuals)
      : std::runtime_error(msg), residual_trace(std::move(residuals)) {}

  std::vector<double> residual_trace;
};

struct FixedPointSolution {
  ChannelSolution channel;
  NodeChainSolution node;
  TimingDerivation timing;
  int iterations = 0;
  double residual = 0.0;
  bool clamped = false;  // conditional start rate was clamped at the solution

  // Diagnostics: the evaluated transmission rate and residual of every
  // iterate, plus every sign-change bracket of update(p) - p found by a
  // coarse scan (more than one signals multiple self-consistent points).
  std::vector<double> tx_prob_trace;
  std::vector<double> residual_trace;
  std::vector<std::pair<double, double>> residual_brackets;
};

// Damped iteration p <- damping * update(p) + (1 - damping) * p until the
// update moves p by at most `tolerance`. Stalls (no new residual minimum for
// 100 iterations) halve the damping, up to four times, before giving up.
FixedPointSolution solve_fixed_point(const MacScenario& s, const SolverOptions& opts = {});

}  // namespace dcmac
