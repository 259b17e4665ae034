#include "dcmac/channel.hpp"

#include "dcmac/node_chain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dcmac {

namespace {

void require_arg(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void require_domain(bool ok, const std::string& msg) {
  if (!ok) throw std::domain_error(msg);
}

bool is_prob(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

double cond_idle_given_idle(double idle, int frame_slots) {
  require_arg(is_prob(idle), "idle must be a probability");
  require_arg(frame_slots >= 1, "frame_slots must be positive");
  require_domain(idle > 0.0, "idle probability of zero leaves the conditional undefined");

  const double value = (frame_slots * idle - 1.0 + idle) / (frame_slots * idle);
  require_domain(value >= 0.0,
                 "idle probability too small: a slot could not follow an idle slot");
  return value;
}

double tx_given_idle_idle(double node_tx, double idle, int frame_slots, bool* clamped) {
  require_arg(is_prob(node_tx), "node_tx must be a probability");
  require_arg(is_prob(idle), "idle must be a probability");
  require_arg(frame_slots >= 1, "frame_slots must be positive");

  const double denom = (frame_slots + 1.0) * idle - 1.0;
  require_domain(denom > 0.0, "channel too busy to recover a conditional start rate");

  const double raw = frame_slots * node_tx / denom;
  const double value = std::clamp(raw, 0.0, 1.0);
  if (clamped) *clamped = raw != value;
  return value;
}

ChannelEventProbs channel_event_probs(double tx_ii, int n_nodes) {
  require_arg(is_prob(tx_ii), "tx_ii must be a probability");
  require_arg(n_nodes >= 1, "n_nodes must be at least 1");

  ChannelEventProbs ev;
  ev.alpha = std::pow(1.0 - tx_ii, n_nodes);
  ev.beta = n_nodes * tx_ii * std::pow(1.0 - tx_ii, n_nodes - 1);
  ev.delta = std::max(0.0, 1.0 - ev.alpha - ev.beta);
  return ev;
}

double idle_idle_prob(double alpha, int frame_slots) {
  require_arg(is_prob(alpha), "alpha must be a probability");
  require_arg(frame_slots >= 1, "frame_slots must be positive");
  return 1.0 / (1.0 + (frame_slots + 1.0) * (1.0 - alpha));
}

double generic_idle_prob(double alpha, int frame_slots) {
  require_arg(is_prob(alpha), "alpha must be a probability");
  require_arg(frame_slots >= 1, "frame_slots must be positive");
  return (2.0 - alpha) / (1.0 + (frame_slots + 1.0) * (1.0 - alpha));
}

ChannelChainLayout::ChannelChainLayout(int frame_slots) : frame_slots_(frame_slots) {
  require_arg(frame_slots >= 1, "frame_slots must be positive");
}

int ChannelChainLayout::success(int slot) const {
  require_arg(slot >= 1 && slot <= frame_slots_, "success slot out of range");
  return slot;
}

int ChannelChainLayout::failure(int slot) const {
  require_arg(slot >= 1 && slot <= frame_slots_, "failure slot out of range");
  return frame_slots_ + slot;
}

Eigen::MatrixXd build_channel_chain(const ChannelEventProbs& ev, int frame_slots) {
  require_arg(is_prob(ev.alpha) && is_prob(ev.beta) && is_prob(ev.delta),
              "event probabilities must be probabilities");
  require_arg(std::abs(ev.alpha + ev.beta + ev.delta - 1.0) <= 1e-9,
              "event probabilities must sum to 1");

  const ChannelChainLayout ix(frame_slots);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ix.size(), ix.size());

  m(ix.idle_idle(), ix.idle_idle()) = ev.alpha;
  m(ix.idle_idle(), ix.success(1)) = ev.beta;
  m(ix.idle_idle(), ix.failure(1)) = ev.delta;

  for (int j = 1; j < frame_slots; ++j) {
    m(ix.success(j), ix.success(j + 1)) = 1.0;
    m(ix.failure(j), ix.failure(j + 1)) = 1.0;
  }
  m(ix.success(frame_slots), ix.idle_after_success()) = 1.0;
  m(ix.failure(frame_slots), ix.idle_after_failure()) = 1.0;
  m(ix.idle_after_success(), ix.idle_idle()) = 1.0;
  m(ix.idle_after_failure(), ix.idle_idle()) = 1.0;

  return m;
}

Eigen::VectorXd brute_force_channel_stationary(const ChannelEventProbs& ev, int frame_slots) {
  return stationary_distribution(build_channel_chain(ev, frame_slots));
}

ChannelSolution solve_channel_response(double node_tx, int n_nodes, int frame_slots) {
  require_arg(is_prob(node_tx), "node_tx must be a probability");
  require_arg(n_nodes >= 1, "n_nodes must be at least 1");
  require_arg(frame_slots >= 1, "frame_slots must be positive");

  ChannelSolution out;
  if (node_tx == 0.0) {
    // Nothing is ever sent: the channel is permanently idle.
    out.idle_given_idle = cond_idle_given_idle(1.0, frame_slots);
    return out;
  }

  // alpha -> (1 - tx_ii(alpha))^N is increasing and convex in alpha, so
  // g(alpha) = alpha - (1 - tx_ii(alpha))^N has a unique sign change on
  // [0, 1]; bisection keeps g(lo) <= 0 <= g(hi).
  const auto tx_ii_at = [&](double alpha, bool* clamped) {
    return tx_given_idle_idle(node_tx, generic_idle_prob(alpha, frame_slots), frame_slots,
                              clamped);
  };
  const auto residual = [&](double alpha) {
    return alpha - std::pow(1.0 - tx_ii_at(alpha, nullptr), n_nodes);
  };

  double lo = 0.0, hi = 1.0;
  if (residual(lo) > 0.0) {
    hi = lo;  // already non-negative at 0: the root is at the boundary
  } else if (residual(hi) < 0.0) {
    lo = hi;
  } else {
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (residual(mid) <= 0.0 ? lo : hi) = mid;
    }
  }
  const double alpha = 0.5 * (lo + hi);

  out.idle = generic_idle_prob(alpha, frame_slots);
  out.idle_idle = idle_idle_prob(alpha, frame_slots);
  out.idle_given_idle = cond_idle_given_idle(out.idle, frame_slots);
  out.tx_given_idle_idle = tx_ii_at(alpha, &out.clamped);

  const ChannelEventProbs ev = channel_event_probs(out.tx_given_idle_idle, n_nodes);
  out.alpha = ev.alpha;
  out.beta = ev.beta;
  out.delta = ev.delta;
  return out;
}

}  // namespace dcmac
