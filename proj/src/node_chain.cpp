#include "dcmac/node_chain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dcmac {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool is_prob(double x) { return x >= 0.0 && x <= 1.0; }

void validate(const NodeChainParams& p) {
  require(is_prob(p.arrival_prob), "arrival_prob must be a probability");
  require(is_prob(p.defer_prob), "defer_prob must be a probability");
  require(is_prob(p.chan_idle), "chan_idle must be a probability");
  require(is_prob(p.chan_idle_given_idle), "chan_idle_given_idle must be a probability");
  require(!p.backoff_sense_probs.empty(), "backoff_sense_probs must not be empty");
  for (double q : p.backoff_sense_probs)
    require(q > 0.0 && q <= 1.0, "backoff_sense_probs entries must be in (0, 1]");
  require(p.frame_slots >= 1, "frame_slots must be positive");
  require(p.resume_prob > 0.0 && p.resume_prob <= 1.0, "resume_prob must be in (0, 1]");
}

}  // namespace

NodeStateLayout::NodeStateLayout(int stages, int frame_slots)
    : stages_(stages), frame_slots_(frame_slots) {
  require(stages >= 1, "layout needs at least one backoff stage");
  require(frame_slots >= 1, "layout needs at least one transmission slot");
}

int NodeStateLayout::backoff(int stage) const {
  require(stage >= 1 && stage <= stages_, "backoff stage out of range");
  return 2 + (stage - 1);
}

int NodeStateLayout::assess(int stage, int step) const {
  require(stage >= 1 && stage <= stages_, "assessment stage out of range");
  require(step == 1 || step == 2, "assessment step must be 1 or 2");
  return 2 + stages_ + 2 * (stage - 1) + (step - 1);
}

int NodeStateLayout::transmit(int slot) const {
  require(slot >= 1 && slot <= frame_slots_, "transmission slot out of range");
  return 2 + 3 * stages_ + (slot - 1);
}

std::vector<double> geometric_backoff_params(int min_be, int max_be, int stages) {
  require(min_be >= 0, "min_be must be non-negative");
  require(max_be >= min_be, "max_be must be at least min_be");
  require(max_be <= 30, "max_be is unreasonably large");
  require(stages >= 1, "stages must be positive");

  std::vector<double> q(stages);
  for (int k = 0; k < stages; ++k) {
    const int be = std::min(min_be + k, max_be);
    const double window = std::ldexp(1.0, be);  // 2^BE
    q[k] = 2.0 / (window + 1.0);
  }
  return q;
}

double deferred_resume_prob(int inactive_slots, int frame_slots) {
  require(inactive_slots >= 0, "inactive_slots must be non-negative");
  require(frame_slots >= 1, "frame_slots must be positive");
  return 2.0 / (inactive_slots + frame_slots + 4.0);
}

Eigen::MatrixXd build_node_chain(const NodeChainParams& params) {
  validate(params);

  const int stages = static_cast<int>(params.backoff_sense_probs.size());
  const NodeStateLayout ix(stages, params.frame_slots);
  const double p = params.arrival_prob;
  const double pd = params.defer_prob;
  const double ci = params.chan_idle;
  const double cii = params.chan_idle_given_idle;
  const double r = params.resume_prob;
  const int L = params.frame_slots;

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ix.size(), ix.size());

  m(ix.idle(), ix.idle()) = 1.0 - p;
  m(ix.idle(), ix.deferred()) = p * pd;
  m(ix.idle(), ix.backoff(1)) = p * (1.0 - pd);

  m(ix.deferred(), ix.deferred()) = 1.0 - r;
  m(ix.deferred(), ix.backoff(1)) = r;

  for (int k = 1; k <= stages; ++k) {
    const double q = params.backoff_sense_probs[k - 1];
    m(ix.backoff(k), ix.backoff(k)) = 1.0 - q;
    m(ix.backoff(k), ix.assess(k, 1)) = q;

    // A busy assessment slot escalates the attempt: hold to the next active
    // period, or back off again. The final stage abandons the frame instead.
    const auto route_busy = [&](int from, double busy) {
      if (k < stages) {
        m(from, ix.deferred()) += busy * pd;
        m(from, ix.backoff(k + 1)) += busy * (1.0 - pd);
      } else {
        m(from, ix.idle()) += busy;
      }
    };

    m(ix.assess(k, 1), ix.assess(k, 2)) = ci;
    route_busy(ix.assess(k, 1), 1.0 - ci);

    m(ix.assess(k, 2), ix.transmit(1)) = cii;
    route_busy(ix.assess(k, 2), 1.0 - cii);
  }

  for (int j = 1; j < L; ++j) m(ix.transmit(j), ix.transmit(j + 1)) = 1.0;
  m(ix.transmit(L), ix.idle()) = 1.0;

  return m;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  require(n >= 1 && m.cols() == n, "transition matrix must be square and non-empty");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(m.row(i).minCoeff() >= 0.0, "transition probabilities must be non-negative");
    require(std::abs(m.row(i).sum() - 1.0) <= 1e-9, "transition matrix rows must sum to 1");
  }

  // Balance equations pi (M - I) = 0 with the last equation swapped for the
  // normalisation sum(pi) = 1.
  Eigen::MatrixXd a = m.transpose();
  a.diagonal().array() -= 1.0;
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;

  Eigen::VectorXd pi = a.partialPivLu().solve(b);
  if (!pi.allFinite() || (m.transpose() * pi - pi).lpNorm<Eigen::Infinity>() > 1e-9) {
    pi = a.fullPivLu().solve(b);
  }

  if (!pi.allFinite()) throw std::runtime_error("stationary solve produced non-finite values");
  if (pi.minCoeff() < -1e-9 || std::abs(pi.sum() - 1.0) > 1e-9)
    throw std::runtime_error("stationary solve left the probability simplex");
  if ((m.transpose() * pi - pi).lpNorm<Eigen::Infinity>() > 1e-9)
    throw std::runtime_error("stationary solve did not satisfy the balance equations");

  // Scrub solver round-off so downstream code sees clean probabilities.
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  return pi;
}

double node_tx_probability(const Eigen::VectorXd& pi, const NodeStateLayout& layout,
                           double chan_idle_given_idle) {
  require(is_prob(chan_idle_given_idle), "chan_idle_given_idle must be a probability");
  require(pi.size() == layout.size(), "occupancy vector does not match the layout");

  double final_assess = 0.0;
  for (int k = 1; k <= layout.stages(); ++k) final_assess += pi(layout.assess(k, 2));
  return chan_idle_given_idle * final_assess;
}

NodeChainSolution solve_node_chain(const NodeChainParams& params) {
  validate(params);

  NodeChainSolution sol;
  sol.params = params;
  const NodeStateLayout ix(static_cast<int>(params.backoff_sense_probs.size()),
                           params.frame_slots);

  if (params.arrival_prob == 0.0) {
    // Without arrivals the idle state absorbs everything; the remaining
    // states are transient and the balance equations alone are degenerate.
    sol.pi = Eigen::VectorXd::Zero(ix.size());
    sol.pi(ix.idle()) = 1.0;
    sol.node_tx_prob = 0.0;
    return sol;
  }

  sol.pi = stationary_distribution(build_node_chain(params));
  sol.node_tx_prob = node_tx_probability(sol.pi, ix, params.chan_idle_given_idle);
  return sol;
}

}  // namespace dcmac
