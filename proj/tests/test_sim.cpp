#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "fluidq/error.hpp"
#include "fluidq/fluid.hpp"
#include "fluidq/sim.hpp"
#include "support/oracles.hpp"

using namespace fluidq;
using testing::TestRng;

namespace {

double conservation_residual(const SimulationStats& stats) {
  return stats.net_energy - stats.overflow_energy + stats.lost_energy -
         (stats.b_final - stats.b_initial);
}

double energy_scale(const SimulationStats& stats) {
  return std::max({1.0, std::abs(stats.net_energy), stats.lost_energy,
                   stats.overflow_energy});
}

}  // namespace

TEST_CASE("replay of a single draining segment") {
  // from full, rate -1 empties bmax=2 at t=2; the remaining 8 of 10 time
  // units are loss of load
  PiecewisePath path{{10.0}, {-1.0}};
  const SimulationStats stats = battery_replay(path, 2.0, 2.0);
  CHECK(stats.lolp == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(stats.llr == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(stats.overflow_rate == 0.0);
  CHECK(stats.b_initial == 2.0);
  CHECK(stats.b_final == 0.0);
  CHECK(std::abs(conservation_residual(stats)) < 1e-12);
}

TEST_CASE("replay of a single charging segment") {
  PiecewisePath path{{10.0}, {1.0}};
  const SimulationStats stats = battery_replay(path, 2.0, 0.0);
  CHECK(stats.lolp == 0.0);
  CHECK(stats.full_prob == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(stats.overflow_rate == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(std::abs(conservation_residual(stats)) < 1e-12);
}

TEST_CASE("zero net rate leaves the battery unchanged") {
  PiecewisePath path{{1.0, 3.0, 1.0}, {-0.5, 0.0, 0.25}};
  const SimulationStats stats = battery_replay(path, 2.0, 1.0);
  CHECK(stats.lolp == 0.0);
  CHECK(stats.b_final == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(std::abs(conservation_residual(stats)) < 1e-12);
}

TEST_CASE("replay input validation") {
  CHECK_THROWS_AS(battery_replay(PiecewisePath{}, 1.0, 0.5), Error);
  CHECK_THROWS_AS(battery_replay(PiecewisePath{{1.0}, {1.0}}, 1.0, 2.0), Error);
  CHECK_THROWS_AS(battery_replay(PiecewisePath{{1.0}, {1.0}}, -1.0, 0.0), Error);
  CHECK_THROWS_AS(battery_replay(PiecewisePath{{0.0}, {1.0}}, 1.0, 0.0), Error);
}

TEST_CASE("ctmc trajectories are reproducible and statistically sound") {
  const auto model = testing::two_state_model(1, 1, 3, 1);
  const Trajectory a = simulate_ctmc(model, 1e5, 42);
  const Trajectory b = simulate_ctmc(model, 1e5, 42);
  CHECK(a.jump_times == b.jump_times);
  CHECK(a.states == b.states);

  const Trajectory c = simulate_ctmc(model, 1e5, 43);
  CHECK(a.jump_times != c.jump_times);

  // symmetric chain: occupancy of each state ~ 1/2
  double time_in_0 = 0.0;
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    const double end =
        k + 1 < a.states.size() ? a.jump_times[k + 1] : a.total_horizon;
    if (a.states[k] == 0) time_in_0 += end - a.jump_times[k];
  }
  CHECK(time_in_0 / a.total_horizon == doctest::Approx(0.5).epsilon(0.02));

  // exponential holding times: per-state mean within 3 sigma of 1/(-Q_ii)
  for (int state : {0, 1}) {
    double total = 0.0;
    int count = 0;
    for (std::size_t k = 0; k + 1 < a.states.size(); ++k) {
      if (a.states[k] == state) {
        total += a.jump_times[k + 1] - a.jump_times[k];
        ++count;
      }
    }
    const double mean = total / count;
    const double expected = 1.0;  // -Q_ii = 1 for both states
    CHECK(std::abs(mean - expected) < 3.0 * expected / std::sqrt(count));
  }
}

TEST_CASE("ctmc replay approaches the fluid solver") {
  const auto model = testing::two_state_model(1, 1, 3, 1);
  const double bmax = 2.0;
  const double target = reliability(solve_stationary(model, bmax)).lolp;

  const SimulationStats stats = simulate_ctmc_replay(model, bmax, 2e5, 7);
  CHECK(stats.stderr_lolp > 0.0);
  CHECK(std::abs(stats.lolp - target) < 3.0 * stats.stderr_lolp);
  CHECK(std::abs(conservation_residual(stats)) < 1e-9 * energy_scale(stats));
}

TEST_CASE("ctmc replay is bit-deterministic") {
  TestRng rng(41);
  const NetGenModel model = testing::random_reversible_model(rng, 4, true);
  const SimulationStats a = simulate_ctmc_replay(model, 1.5, 5e3, 99);
  const SimulationStats b = simulate_ctmc_replay(model, 1.5, 5e3, 99);
  CHECK(std::memcmp(&a, &b, sizeof(SimulationStats)) == 0);
}

TEST_CASE("negative drift forces losses at least at the drift rate") {
  const auto model = testing::two_state_model(1, 1, 1.5, 1);  // drift -0.25
  const SimulationStats stats = simulate_ctmc_replay(model, 2.0, 2e5, 11);
  CHECK(stats.llr > 0.25 * 0.98);
  CHECK(std::abs(conservation_residual(stats)) < 1e-9 * energy_scale(stats));
}

TEST_CASE("deterministic dtmc alternation has sawtooth geometry") {
  // states alternate every slot; rates alternate -1, +1 over bmax = 0.5,
  // so each period spends half its time saturated: lolp = full = 1/4
  Eigen::MatrixXd t(2, 2);
  t << 0, 1, 1, 0;
  Eigen::VectorXd centers(2);
  centers << 0.0, 2.0;
  const SimulationStats stats =
      simulate_dtmc_replay(t, 1.0, centers, 1.0, 0.5, 1e4, 3);
  CHECK(stats.lolp == doctest::Approx(0.25).epsilon(2e-3));
  CHECK(stats.full_prob == doctest::Approx(0.25).epsilon(2e-3));
  CHECK(std::abs(conservation_residual(stats)) < 1e-9 * energy_scale(stats));
}

TEST_CASE("dtmc replay converges to ctmc statistics") {
  const auto model = testing::two_state_model(1, 1, 3, 1);
  const double bmax = 2.0;
  const double target = reliability(solve_stationary(model, bmax)).lolp;

  const UniformizedChain chain = uniformize(model.q_matrix(), 20.0);
  Eigen::VectorXd centers(2);
  centers << 0.0, 3.0;  // rates = centers - demand with demand 1
  const SimulationStats stats = simulate_dtmc_replay(
      chain.p_matrix, 1.0 / chain.q_rate, centers, 1.0, bmax, 2e5, 17);
  CHECK(std::abs(stats.lolp - target) < 4.0 * stats.stderr_lolp);
}

TEST_CASE("trace replay constants") {
  // always-surplus trace: no loss once the transient has been burnt in
  std::vector<double> surplus(1000, 3.0);
  SimulateOptions opts;
  opts.b0 = 1.0;
  const SimulationStats charged = trace_replay(surplus, 1.0, 1.0, 2.0, opts);
  CHECK(charged.lolp == 0.0);

  // always-deficit trace from empty: loss of load throughout
  std::vector<double> deficit(1000, 0.5);
  opts.b0 = 0.0;
  const SimulationStats drained = trace_replay(deficit, 1.0, 1.0, 2.0, opts);
  CHECK(drained.lolp == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(trace_replay({}, 1.0, 1.0, 2.0), Error);
  CHECK_THROWS_AS(trace_replay({-1.0}, 1.0, 1.0, 2.0), Error);
}

TEST_CASE("trace replay reproduces the dtmc replay on its own path") {
  Eigen::MatrixXd t(3, 3);
  t << 0.2, 0.5, 0.3, 0.4, 0.2, 0.4, 0.25, 0.5, 0.25;
  Eigen::VectorXd centers(3);
  centers << 0.5, 1.5, 3.0;
  const double tau = 0.7;
  const double demand = 1.2;
  const double bmax = 1.8;
  const std::uint64_t seed = 5;
  const double horizon = 700.0;

  const SimulationStats direct =
      simulate_dtmc_replay(t, tau, centers, demand, bmax, horizon, seed);

  const int steps = static_cast<int>(std::ceil(horizon / tau));
  const std::vector<int> states = sample_dtmc(t, steps, seed);
  std::vector<double> trace;
  trace.reserve(states.size());
  for (int s : states) trace.push_back(centers(s));
  SimulateOptions opts;
  const SimulationStats replayed = trace_replay(trace, tau, demand, bmax, opts);

  CHECK(replayed.lolp == direct.lolp);
  CHECK(replayed.llr == direct.llr);
  CHECK(replayed.overflow_rate == direct.overflow_rate);
  CHECK(replayed.stderr_lolp == direct.stderr_lolp);
}

TEST_CASE("path-level conservation on random model replays") {
  TestRng rng(42);
  for (int trial = 0; trial < 4; ++trial) {
    const NetGenModel model = testing::random_reversible_model(rng, 5, trial % 2 == 0);
    const SimulationStats stats =
        simulate_ctmc_replay(model, 0.8 + trial, 2e4, 100 + trial);
    CHECK(std::abs(conservation_residual(stats)) < 1e-9 * energy_scale(stats));
  }
}

TEST_CASE("trajectory sampling at fixed intervals") {
  Trajectory trajectory;
  trajectory.jump_times = {0.0, 1.0, 2.5};
  trajectory.states = {0, 1, 0};
  trajectory.total_horizon = 4.0;
  const std::vector<int> samples = sample_at_interval(trajectory, 1.0);
  CHECK(samples == std::vector<int>{0, 1, 1, 0});
}
