#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "fluidq/ctmc.hpp"

namespace fluidq {

// Piecewise-constant state path: states[k] is occupied on
// [jump_times[k], jump_times[k+1]), the final segment ending at
// total_horizon. jump_times[0] == 0.
struct Trajectory {
  std::vector<double> jump_times;
  std::vector<int> states;
  double total_horizon = 0.0;
};

// Piecewise-constant net-generation path.
struct PiecewisePath {
  std::vector<double> durations;
  std::vector<double> rates;
};

PiecewisePath path_from_trajectory(const Trajectory& trajectory,
                                   const Eigen::VectorXd& rates);

// State indices at times 0, dt, 2 dt, ... < total_horizon.
std::vector<int> sample_at_interval(const Trajectory& trajectory, double dt);

struct ReplayOptions {
  double burn_in_fraction = 0.0;  // leading fraction excluded from statistics
  int batch_count = 20;           // batch-means batches for stderr_lolp
};

struct SimulationStats {
  double lolp = 0.0;           // time fraction: battery empty while rate < 0
  double llr = 0.0;            // unserved power, time average
  double overflow_rate = 0.0;  // wasted power, time average
  double full_prob = 0.0;      // time fraction: battery full while rate > 0
  double stderr_lolp = 0.0;    // batch-means standard error of lolp
  double horizon = 0.0;        // measurement window length (post burn-in)
  std::uint64_t seed = 0;

  // Exact energy totals over the measurement window; they satisfy
  // net_energy - overflow_energy + lost_energy = b_final - b_initial.
  double net_energy = 0.0;
  double lost_energy = 0.0;
  double overflow_energy = 0.0;
  double b_initial = 0.0;
  double b_final = 0.0;
};

// Background CTMC path: initial state drawn from the invariant distribution,
// exponential holding times. Bit-reproducible for a fixed seed (mt19937_64
// with 53-bit uniforms and inverse-CDF exponentials).
Trajectory simulate_ctmc(const NetGenModel& model, double horizon,
                         std::uint64_t seed);

// Row-stochastic DTMC path of `steps` states; initial state uniform unless
// given. Same generator contract as simulate_ctmc.
std::vector<int> sample_dtmc(const Eigen::MatrixXd& t_matrix, int steps,
                             std::uint64_t seed,
                             std::optional<int> initial_state = std::nullopt);

// Exact integration of the regulated battery dynamics along a
// piecewise-constant net-generation path: within each segment the level
// moves linearly and saturates at 0 or bmax, with saturation instants
// computed analytically (no time-stepping error).
SimulationStats battery_replay(const PiecewisePath& path, double bmax,
                               double b0, const ReplayOptions& options = {});

struct SimulateOptions {
  std::optional<double> b0;       // default bmax / 2
  double burn_in_fraction = 0.01;
  int batch_count = 20;
};

SimulationStats simulate_ctmc_replay(const NetGenModel& model, double bmax,
                                     double horizon, std::uint64_t seed,
                                     const SimulateOptions& options = {});

// Generation held constant over tau-length slots, following a DTMC sampled
// from t_matrix; horizon is rounded up to a whole number of slots.
SimulationStats simulate_dtmc_replay(const Eigen::MatrixXd& t_matrix,
                                     double tau,
                                     const Eigen::VectorXd& bin_centers,
                                     double demand, double bmax,
                                     double horizon, std::uint64_t seed,
                                     const SimulateOptions& options = {});

// Deterministic replay of a sampled generation trace against a constant
// demand: net rate per slot is value - demand.
SimulationStats trace_replay(const std::vector<double>& trace,
                             double sample_interval, double demand,
                             double bmax, const SimulateOptions& options = {});

}  // namespace fluidq
