#include <doctest.h>

#include "dcmac/node_chain.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"

using namespace dcmac;

namespace {

NodeChainParams typical_params() {
  NodeChainParams p;
  p.arrival_prob = 0.0064;
  p.defer_prob = 0.0078125;
  p.chan_idle = 0.93;
  p.chan_idle_given_idle = 0.95;
  p.backoff_sense_probs = geometric_backoff_params(3, 5, 5);
  p.frame_slots = 10;
  p.resume_prob = deferred_resume_prob(0, 10);
  return p;
}

NodeChainParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> u_stage(1, 6);
  std::uniform_int_distribution<int> u_frame(1, 12);
  std::uniform_int_distribution<int> u_be(0, 6);
  NodeChainParams p;
  p.arrival_prob = u01(rng);
  p.defer_prob = u01(rng);
  p.chan_idle = u01(rng);
  p.chan_idle_given_idle = u01(rng);
  const int min_be = u_be(rng);
  p.backoff_sense_probs = geometric_backoff_params(min_be, min_be + u_be(rng) / 2, u_stage(rng));
  p.frame_slots = u_frame(rng);
  p.resume_prob = 0.01 + 0.99 * u01(rng);
  return p;
}

}  // namespace

TEST_SUITE("node-chain") {

TEST_CASE("geometric decrement probabilities per stage") {
  const std::vector<double> q = geometric_backoff_params(3, 5, 5);
  REQUIRE(q.size() == 5);
  CHECK(q[0] == doctest::Approx(2.0 / 9.0).epsilon(1e-15));   // window 8
  CHECK(q[1] == doctest::Approx(2.0 / 17.0).epsilon(1e-15));  // window 16
  CHECK(q[2] == doctest::Approx(2.0 / 33.0).epsilon(1e-15));  // window 32, capped
  CHECK(q[3] == q[2]);
  CHECK(q[4] == q[2]);
}

TEST_CASE("geometric decrement edge cases") {
  // Exponent 0 means a window of one slot: the draw is always zero, so the
  // matching geometric parameter is 1 (leave immediately).
  const std::vector<double> q0 = geometric_backoff_params(0, 0, 3);
  for (double q : q0) CHECK(q == 1.0);

  const std::vector<double> flat = geometric_backoff_params(4, 4, 4);
  for (double q : flat) CHECK(q == doctest::Approx(2.0 / 17.0).epsilon(1e-15));

  CHECK_THROWS_AS(geometric_backoff_params(5, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(geometric_backoff_params(3, 5, 0), std::invalid_argument);
}

TEST_CASE("deferred hold leaves at the matching geometric rate") {
  CHECK(deferred_resume_prob(0, 10) == doctest::Approx(2.0 / 14.0).epsilon(1e-15));
  CHECK(deferred_resume_prob(1152, 10) == doctest::Approx(2.0 / 1166.0).epsilon(1e-15));
  CHECK(deferred_resume_prob(1440, 10) == doctest::Approx(2.0 / 1454.0).epsilon(1e-15));
}

TEST_CASE("state layout is a bijection onto [0, size)") {
  const NodeStateLayout lay(5, 10);
  CHECK(lay.size() == 27);
  std::vector<int> seen(lay.size(), 0);
  seen[lay.idle()]++;
  seen[lay.deferred()]++;
  for (int k = 1; k <= 5; ++k) {
    seen[lay.backoff(k)]++;
    seen[lay.assess(k, 1)]++;
    seen[lay.assess(k, 2)]++;
  }
  for (int j = 1; j <= 10; ++j) seen[lay.transmit(j)]++;
  for (int count : seen) CHECK(count == 1);
}

TEST_CASE("transition rows are stochastic over random parameters") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const NodeChainParams p = random_params(rng);
    const Eigen::MatrixXd m = build_node_chain(p);
    REQUIRE(m.rows() == m.cols());
    for (int r = 0; r < m.rows(); ++r) {
      double sum = 0.0;
      for (int c = 0; c < m.cols(); ++c) {
        CHECK(m(r, c) >= -1e-15);
        sum += m(r, c);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("stationary solve on small hand-checked chains") {
  // Two-state chain with unequal switching rates: pi = (b, a) / (a + b).
  Eigen::MatrixXd m(2, 2);
  const double a = 0.3;
  const double b = 0.1;
  m << 1 - a, a, b, 1 - b;
  const Eigen::VectorXd pi = stationary_distribution(m);
  CHECK(pi(0) == doctest::Approx(b / (a + b)).epsilon(1e-12));
  CHECK(pi(1) == doctest::Approx(a / (a + b)).epsilon(1e-12));

  // A periodic flip-flop still has a unique stationary row vector.
  Eigen::MatrixXd flip(2, 2);
  flip << 0, 1, 1, 0;
  const Eigen::VectorXd pf = stationary_distribution(flip);
  CHECK(pf(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pf(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("stationary solve rejects malformed input") {
  Eigen::MatrixXd not_square(2, 3);
  not_square.setZero();
  CHECK_THROWS_AS(stationary_distribution(not_square), std::invalid_argument);

  Eigen::MatrixXd bad_rows(2, 2);
  bad_rows << 0.5, 0.2, 0.3, 0.7;  // first row sums to 0.7
  CHECK_THROWS_AS(stationary_distribution(bad_rows), std::invalid_argument);
}

TEST_CASE("direct solve matches the power-iteration oracle") {
  const Eigen::MatrixXd m = build_node_chain(typical_params());
  const Eigen::VectorXd direct = stationary_distribution(m);
  const Eigen::VectorXd iterated = oracles::power_iteration_stationary(m);
  REQUIRE(direct.size() == iterated.size());
  for (int i = 0; i < direct.size(); ++i) {
    CHECK(direct(i) == doctest::Approx(iterated(i)).epsilon(1e-10));
  }
}

TEST_CASE("direct solve matches the oracle over random chains") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    NodeChainParams p = random_params(rng);
    p.arrival_prob = 0.001 + 0.2 * p.arrival_prob;  // keep the chain irreducible
    p.chan_idle = 0.3 + 0.7 * p.chan_idle;
    p.chan_idle_given_idle = 0.3 + 0.7 * p.chan_idle_given_idle;
    const Eigen::MatrixXd m = build_node_chain(p);
    const Eigen::VectorXd direct = stationary_distribution(m);
    const Eigen::VectorXd iterated = oracles::power_iteration_stationary(m);
    for (int i = 0; i < direct.size(); ++i) {
      CHECK(std::abs(direct(i) - iterated(i)) < 1e-10);
    }
  }
}

TEST_CASE("no arrivals leaves the node parked") {
  NodeChainParams p = typical_params();
  p.arrival_prob = 0.0;
  const NodeChainSolution sol = solve_node_chain(p);
  const NodeStateLayout lay = sol.layout();
  CHECK(sol.pi(lay.idle()) == 1.0);
  CHECK(sol.node_tx_prob == 0.0);
  CHECK(sol.pi.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("an always-clear channel never reaches the retry stages") {
  NodeChainParams p = typical_params();
  p.defer_prob = 0.0;
  p.chan_idle = 1.0;
  p.chan_idle_given_idle = 1.0;
  const NodeChainSolution sol = solve_node_chain(p);
  const NodeStateLayout lay = sol.layout();
  CHECK(sol.pi(lay.deferred()) == doctest::Approx(0.0).epsilon(1e-12));
  for (int k = 2; k <= lay.stages(); ++k) {
    CHECK(sol.pi(lay.backoff(k)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.pi(lay.assess(k, 1)) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.pi(lay.assess(k, 2)) == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK(sol.node_tx_prob > 0.0);
}

TEST_CASE("a channel that never clears yields no transmissions") {
  NodeChainParams p = typical_params();
  p.chan_idle_given_idle = 0.0;
  const NodeChainSolution sol = solve_node_chain(p);
  const NodeStateLayout lay = sol.layout();
  CHECK(sol.node_tx_prob == 0.0);
  for (int j = 1; j <= lay.frame_slots(); ++j) {
    CHECK(sol.pi(lay.transmit(j)) == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK(sol.pi.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("every frame slot carries the same stationary mass") {
  const NodeChainSolution sol = solve_node_chain(typical_params());
  const NodeStateLayout lay = sol.layout();
  const double first = sol.pi(lay.transmit(1));
  CHECK(first > 0.0);
  for (int j = 2; j <= lay.frame_slots(); ++j) {
    CHECK(sol.pi(lay.transmit(j)) == doctest::Approx(first).epsilon(1e-12));
  }
  // Occupancy of the first frame slot is exactly the per-slot start rate.
  CHECK(sol.node_tx_prob == doctest::Approx(first).epsilon(1e-12));
}

TEST_CASE("more deferral pushes more mass into the hold state") {
  NodeChainParams p = typical_params();
  double prev = -1.0;
  for (double pd : {0.0078125, 0.25, 0.7578125, 0.9453125}) {
    p.defer_prob = pd;
    const NodeChainSolution sol = solve_node_chain(p);
    const double held = sol.pi(sol.layout().deferred());
    CHECK(held > prev);
    prev = held;
  }
}

TEST_CASE("stationary occupancy matches a simulated trajectory") {
  // Fast-mixing parameters so batch means give an honest error bar.
  NodeChainParams p;
  p.arrival_prob = 0.02;
  p.defer_prob = 0.05;
  p.chan_idle = 0.9;
  p.chan_idle_given_idle = 0.95;
  p.backoff_sense_probs = geometric_backoff_params(2, 3, 3);
  p.frame_slots = 3;
  p.resume_prob = 0.5;

  const NodeChainSolution sol = solve_node_chain(p);
  const NodeStateLayout lay = sol.layout();
  const Eigen::MatrixXd m = build_node_chain(p);

  const oracles::FrequencyEstimate est =
      oracles::sample_state_frequency(m, lay.transmit(1), 500000, 20260816ULL);
  CHECK(std::abs(est.mean - sol.node_tx_prob) < 3.0 * est.stderr_batch + 1e-12);

  const oracles::FrequencyEstimate idle_est =
      oracles::sample_state_frequency(m, lay.idle(), 500000, 1ULL);
  CHECK(std::abs(idle_est.mean - sol.pi(lay.idle())) < 3.0 * idle_est.stderr_batch + 1e-12);
}

TEST_CASE("solution distributions are normalised over random parameters") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    NodeChainParams p = random_params(rng);
    p.arrival_prob = 0.001 + 0.5 * p.arrival_prob;
    p.chan_idle = 0.05 + 0.95 * p.chan_idle;
    p.chan_idle_given_idle = 0.05 + 0.95 * p.chan_idle_given_idle;
    const NodeChainSolution sol = solve_node_chain(p);
    CHECK(sol.pi.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.pi.minCoeff() >= 0.0);
    CHECK(sol.node_tx_prob >= 0.0);
    CHECK(sol.node_tx_prob <= 1.0);
  }
}

}  // TEST_SUITE
