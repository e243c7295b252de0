#include "fluidq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fluidq/error.hpp"
#include "rng.hpp"

namespace fluidq {

namespace {

enum class Regime { moving, at_empty, at_full };

// Collects statistics over the measurement window [window_start, horizon],
// splitting loss intervals across batch boundaries for batch-means errors.
class ReplayAccumulator {
 public:
  ReplayAccumulator(double window_start, double horizon, int batch_count)
      : t0_(window_start),
        t1_(horizon),
        batch_width_((horizon - window_start) / batch_count),
        batch_empty_(batch_count, 0.0) {}

  // Piece [a, b) with constant net rate and uniform regime; level_a is the
  // battery level at time a (constant over the piece unless moving).
  void add(double a, double b, double level_a, double rate, Regime regime) {
    if (a <= t0_ && t0_ < b) b_initial_ = level_at(a, level_a, rate, regime, t0_);
    if (a < t1_ && t1_ <= b) b_final_ = level_at(a, level_a, rate, regime, t1_);

    const double lo = std::max(a, t0_);
    const double hi = std::min(b, t1_);
    if (hi <= lo) return;
    const double dt = hi - lo;

    net_energy_ += rate * dt;
    if (regime == Regime::at_empty && rate < 0.0) {
      empty_time_ += dt;
      lost_energy_ += -rate * dt;
      add_to_batches(lo, hi);
    } else if (regime == Regime::at_full && rate > 0.0) {
      full_time_ += dt;
      overflow_energy_ += rate * dt;
    }
  }

  SimulationStats finish(double b0) const {
    SimulationStats stats;
    const double window = t1_ - t0_;
    stats.horizon = window;
    stats.lolp = empty_time_ / window;
    stats.llr = lost_energy_ / window;
    stats.overflow_rate = overflow_energy_ / window;
    stats.full_prob = full_time_ / window;
    stats.net_energy = net_energy_;
    stats.lost_energy = lost_energy_;
    stats.overflow_energy = overflow_energy_;
    stats.b_initial = t0_ == 0.0 ? b0 : b_initial_;
    stats.b_final = b_final_;

    const int batches = static_cast<int>(batch_empty_.size());
    if (batches > 1) {
      double mean = 0.0;
      for (double e : batch_empty_) mean += e / batch_width_;
      mean /= batches;
      double variance = 0.0;
      for (double e : batch_empty_) {
        const double d = e / batch_width_ - mean;
        variance += d * d;
      }
      variance /= batches - 1;
      stats.stderr_lolp = std::sqrt(variance / batches);
    }
    return stats;
  }

 private:
  static double level_at(double a, double level_a, double rate, Regime regime,
                         double t) {
    return regime == Regime::moving ? level_a + rate * (t - a) : level_a;
  }

  void add_to_batches(double lo, double hi) {
    const int last = static_cast<int>(batch_empty_.size()) - 1;
    int k = std::clamp(static_cast<int>((lo - t0_) / batch_width_), 0, last);
    while (lo < hi) {
      const double end = std::min(hi, t0_ + (k + 1) * batch_width_);
      batch_empty_[std::min(k, last)] += std::max(end - lo, 0.0);
      if (end >= hi) break;
      lo = end;
      ++k;
    }
  }

  double t0_;
  double t1_;
  double batch_width_;
  std::vector<double> batch_empty_;
  double empty_time_ = 0.0;
  double full_time_ = 0.0;
  double net_energy_ = 0.0;
  double lost_energy_ = 0.0;
  double overflow_energy_ = 0.0;
  double b_initial_ = 0.0;
  double b_final_ = 0.0;
};

void validate_stochastic(const Eigen::MatrixXd& t_matrix) {
  if (t_matrix.rows() != t_matrix.cols() || t_matrix.rows() == 0) {
    throw Error(ErrorCategory::model, "transition matrix must be square");
  }
  if ((t_matrix.array() < 0.0).any()) {
    throw Error(ErrorCategory::model, "transition matrix has negative entries");
  }
  for (Eigen::Index i = 0; i < t_matrix.rows(); ++i) {
    if (std::abs(t_matrix.row(i).sum() - 1.0) > 1e-9) {
      throw Error(ErrorCategory::model,
                  "transition matrix row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

}  // namespace

PiecewisePath path_from_trajectory(const Trajectory& trajectory,
                                   const Eigen::VectorXd& rates) {
  const std::size_t n = trajectory.states.size();
  if (trajectory.jump_times.size() != n || n == 0) {
    throw Error(ErrorCategory::model, "trajectory has mismatched jump_times/states");
  }
  PiecewisePath path;
  path.durations.reserve(n);
  path.rates.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double end =
        k + 1 < n ? trajectory.jump_times[k + 1] : trajectory.total_horizon;
    const double duration = end - trajectory.jump_times[k];
    if (duration < 0.0) {
      throw Error(ErrorCategory::model, "trajectory jump times are not increasing");
    }
    const int state = trajectory.states[k];
    if (state < 0 || state >= rates.size()) {
      throw Error(ErrorCategory::model, "trajectory state index out of range");
    }
    path.durations.push_back(duration);
    path.rates.push_back(rates(state));
  }
  return path;
}

std::vector<int> sample_at_interval(const Trajectory& trajectory, double dt) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCategory::model, "sampling interval must be positive");
  }
  std::vector<int> samples;
  std::size_t segment = 0;
  for (double t = 0.0; t < trajectory.total_horizon; t += dt) {
    while (segment + 1 < trajectory.jump_times.size() &&
           trajectory.jump_times[segment + 1] <= t) {
      ++segment;
    }
    samples.push_back(trajectory.states[segment]);
  }
  return samples;
}

Trajectory simulate_ctmc(const NetGenModel& model, double horizon,
                         std::uint64_t seed) {
  if (!(horizon > 0.0)) {
    throw Error(ErrorCategory::model, "horizon must be positive");
  }
  const Eigen::MatrixXd& q = model.q_matrix().entries();
  const int n = model.size();
  const Eigen::VectorXd pi = invariant_distribution(model.q_matrix());

  detail::Rng rng(seed);
  Trajectory trajectory;
  trajectory.total_horizon = horizon;

  int state = rng.categorical(pi);
  double t = 0.0;
  while (t < horizon) {
    trajectory.jump_times.push_back(t);
    trajectory.states.push_back(state);
    t += rng.exponential(-q(state, state));
    if (t >= horizon) break;
    Eigen::VectorXd weights = q.row(state).transpose().cwiseMax(0.0);
    weights(state) = 0.0;
    state = rng.categorical(weights);
  }
  return trajectory;
}

std::vector<int> sample_dtmc(const Eigen::MatrixXd& t_matrix, int steps,
                             std::uint64_t seed,
                             std::optional<int> initial_state) {
  validate_stochastic(t_matrix);
  if (steps <= 0) {
    throw Error(ErrorCategory::model, "step count must be positive");
  }
  const int n = static_cast<int>(t_matrix.rows());
  detail::Rng rng(seed);
  int state = initial_state.value_or(-1);
  if (state < 0) state = rng.uniform_int(n);
  if (state >= n) {
    throw Error(ErrorCategory::model, "initial state out of range");
  }
  std::vector<int> states;
  states.reserve(steps);
  states.push_back(state);
  for (int k = 1; k < steps; ++k) {
    state = rng.categorical(t_matrix.row(state).transpose());
    states.push_back(state);
  }
  return states;
}

SimulationStats battery_replay(const PiecewisePath& path, double bmax,
                               double b0, const ReplayOptions& options) {
  if (path.durations.size() != path.rates.size() || path.durations.empty()) {
    throw Error(ErrorCategory::model, "replay path is empty or mismatched");
  }
  if (!(bmax > 0.0) || !(b0 >= 0.0 && b0 <= bmax)) {
    throw Error(ErrorCategory::model, "need bmax > 0 and b0 in [0, bmax]");
  }
  if (!(options.burn_in_fraction >= 0.0 && options.burn_in_fraction < 1.0)) {
    throw Error(ErrorCategory::model, "burn-in fraction must lie in [0, 1)");
  }
  if (options.batch_count < 1) {
    throw Error(ErrorCategory::model, "batch count must be at least 1");
  }

  double total = 0.0;
  for (double d : path.durations) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw Error(ErrorCategory::model, "segment durations must be finite and >= 0");
    }
    total += d;
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCategory::model, "replay path has zero total duration");
  }

  ReplayAccumulator acc(options.burn_in_fraction * total, total,
                        options.batch_count);
  double t = 0.0;
  double level = b0;
  for (std::size_t k = 0; k < path.durations.size(); ++k) {
    const double rate = path.rates[k];
    const double t_end = t + path.durations[k];
    while (t < t_end) {
      if (rate < 0.0) {
        if (level <= 0.0) {
          acc.add(t, t_end, 0.0, rate, Regime::at_empty);
          t = t_end;
        } else {
          const double t_hit = t + level / -rate;
          if (t_hit < t_end) {
            acc.add(t, t_hit, level, rate, Regime::moving);
            level = 0.0;
            t = t_hit;
          } else {
            acc.add(t, t_end, level, rate, Regime::moving);
            level = std::max(level + rate * (t_end - t), 0.0);
            t = t_end;
          }
        }
      } else if (rate > 0.0) {
        if (level >= bmax) {
          acc.add(t, t_end, bmax, rate, Regime::at_full);
          t = t_end;
        } else {
          const double t_hit = t + (bmax - level) / rate;
          if (t_hit < t_end) {
            acc.add(t, t_hit, level, rate, Regime::moving);
            level = bmax;
            t = t_hit;
          } else {
            acc.add(t, t_end, level, rate, Regime::moving);
            level = std::min(level + rate * (t_end - t), bmax);
            t = t_end;
          }
        }
      } else {
        acc.add(t, t_end, level, 0.0, Regime::moving);
        t = t_end;
      }
    }
    t = t_end;
  }
  return acc.finish(b0);
}

SimulationStats simulate_ctmc_replay(const NetGenModel& model, double bmax,
                                     double horizon, std::uint64_t seed,
                                     const SimulateOptions& options) {
  const Trajectory trajectory = simulate_ctmc(model, horizon, seed);
  const PiecewisePath path = path_from_trajectory(trajectory, model.rates());
  ReplayOptions replay{options.burn_in_fraction, options.batch_count};
  SimulationStats stats =
      battery_replay(path, bmax, options.b0.value_or(bmax / 2.0), replay);
  stats.seed = seed;
  return stats;
}

SimulationStats simulate_dtmc_replay(const Eigen::MatrixXd& t_matrix,
                                     double tau,
                                     const Eigen::VectorXd& bin_centers,
                                     double demand, double bmax,
                                     double horizon, std::uint64_t seed,
                                     const SimulateOptions& options) {
  if (!(tau > 0.0)) {
    throw Error(ErrorCategory::model, "slot length tau must be positive");
  }
  if (bin_centers.size() != t_matrix.rows()) {
    throw Error(ErrorCategory::model, "bin centers do not match transition matrix");
  }
  if (!(horizon > 0.0)) {
    throw Error(ErrorCategory::model, "horizon must be positive");
  }
  const int steps = static_cast<int>(std::ceil(horizon / tau));
  const std::vector<int> states = sample_dtmc(t_matrix, steps, seed);

  PiecewisePath path;
  path.durations.assign(states.size(), tau);
  path.rates.reserve(states.size());
  for (int s : states) path.rates.push_back(bin_centers(s) - demand);

  ReplayOptions replay{options.burn_in_fraction, options.batch_count};
  SimulationStats stats =
      battery_replay(path, bmax, options.b0.value_or(bmax / 2.0), replay);
  stats.seed = seed;
  return stats;
}

SimulationStats trace_replay(const std::vector<double>& trace,
                             double sample_interval, double demand,
                             double bmax, const SimulateOptions& options) {
  if (trace.empty()) {
    throw Error(ErrorCategory::model, "trace is empty");
  }
  if (!(sample_interval > 0.0)) {
    throw Error(ErrorCategory::model, "sample interval must be positive");
  }
  PiecewisePath path;
  path.durations.assign(trace.size(), sample_interval);
  path.rates.reserve(trace.size());
  for (double value : trace) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw Error(ErrorCategory::model, "trace values must be finite and >= 0");
    }
    path.rates.push_back(value - demand);
  }
  ReplayOptions replay{options.burn_in_fraction, options.batch_count};
  return battery_replay(path, bmax, options.b0.value_or(bmax / 2.0), replay);
}

}  // namespace fluidq
