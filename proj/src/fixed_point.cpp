#include "dcmac/fixed_point.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcmac {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

NodeChainParams chain_params(const ModelInputs& in, const ChannelSolution& chan) {
  NodeChainParams p;
  p.arrival_prob = in.timing.arrival_prob;
  p.defer_prob = in.timing.defer_prob;
  p.chan_idle = chan.idle;
  p.chan_idle_given_idle = chan.idle_given_idle;
  p.backoff_sense_probs = in.backoff_sense_probs;
  p.frame_slots = in.timing.frame_slots;
  p.resume_prob = in.resume_prob;
  return p;
}

// Sign-change brackets of update(p) - p over a coarse grid, to surface any
// additional self-consistent operating points.
std::vector<std::pair<double, double>> scan_brackets(const ModelInputs& in) {
  constexpr int kPoints = 33;
  std::vector<std::pair<double, double>> brackets;
  double prev_p = 0.0;
  double prev_r = tx_prob_update(in, prev_p).tx_prob - prev_p;
  for (int i = 1; i < kPoints; ++i) {
    const double p = static_cast<double>(i) / (kPoints - 1);
    const double r = tx_prob_update(in, p).tx_prob - p;
    if ((prev_r <= 0.0 && r >= 0.0) || (prev_r >= 0.0 && r <= 0.0))
      brackets.emplace_back(prev_p, p);
    prev_p = p;
    prev_r = r;
  }
  return brackets;
}

}  // namespace

ModelInputs model_inputs(const MacScenario& s) {
  ModelInputs in;
  in.n_nodes = s.n_nodes;
  in.timing = derive_timing(s);
  in.backoff_sense_probs =
      geometric_backoff_params(s.mac_min_be, s.mac_max_be, s.max_backoff_stages);
  in.resume_prob = deferred_resume_prob(in.timing.inactive_slots, in.timing.frame_slots);
  return in;
}

UpdateResult tx_prob_update(const ModelInputs& in, double tx_prob) {
  UpdateResult out;
  out.channel = solve_channel_response(tx_prob, in.n_nodes, in.timing.frame_slots);
  out.node = solve_node_chain(chain_params(in, out.channel));
  out.tx_prob = out.node.node_tx_prob;
  return out;
}

FixedPointSolution solve_fixed_point(const MacScenario& s, const SolverOptions& opts) {
  require(opts.tolerance > 0, "tolerance must be positive");
  require(opts.max_iterations >= 1, "max_iterations must be at least 1");
  require(opts.damping > 0 && opts.damping <= 1, "damping must be in (0, 1]");
  require(opts.initial_tx_prob >= 0 && opts.initial_tx_prob <= 1,
          "initial_tx_prob must be a probability");

  const ModelInputs in = model_inputs(s);

  FixedPointSolution sol;
  sol.timing = in.timing;

  if (in.timing.arrival_prob == 0.0) {
    // No traffic: the solution is exact without iterating.
    const UpdateResult up = tx_prob_update(in, 0.0);
    sol.channel = up.channel;
    sol.node = up.node;
    sol.iterations = 1;
    sol.residual = 0.0;
    sol.clamped = up.channel.clamped;
    sol.tx_prob_trace = {0.0};
    sol.residual_trace = {0.0};
    sol.residual_brackets = {{0.0, 0.0}};
    return sol;
  }

  double p = opts.initial_tx_prob;
  double theta = opts.damping;
  int halvings = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    const UpdateResult up = tx_prob_update(in, p);
    const double residual = std::abs(up.tx_prob - p);
    sol.tx_prob_trace.push_back(p);
    sol.residual_trace.push_back(residual);

    if (residual <= opts.tolerance) {
      sol.channel = up.channel;
      sol.node = up.node;
      sol.iterations = iter;
      sol.residual = residual;
      sol.clamped = up.channel.clamped;
      sol.residual_brackets = scan_brackets(in);
      return sol;
    }

    // Oscillation watch: damp harder when the residual stops improving.
    if (residual < best_residual) {
      best_residual = residual;
      since_best = 0;
    } else if (++since_best >= 100) {
      if (halvings >= 4)
        throw FixedPointError("damped iteration oscillates without converging",
                              sol.residual_trace);
      theta *= 0.5;
      ++halvings;
      since_best = 0;
    }

    p = theta * up.tx_prob + (1.0 - theta) * p;
  }

  throw FixedPointError("no convergence within the iteration budget", sol.residual_trace);
}

}  // namespace dcmac
