#include "fluidq/fit.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fluidq/error.hpp"

namespace fluidq {

namespace {

std::string format_power(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

}  // namespace

BinningSpec::BinningSpec(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 3) {
    throw Error(ErrorCategory::model, "binning needs at least 2 bins (3 edges)");
  }
  for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
    if (!(edges_[i] < edges_[i + 1])) {
      throw Error(ErrorCategory::model,
                  "bin edges must be strictly increasing (edge " +
                      std::to_string(i + 1) + ")");
    }
  }
}

Eigen::VectorXd BinningSpec::centers() const {
  Eigen::VectorXd c(bin_count());
  for (int i = 0; i < bin_count(); ++i) c(i) = 0.5 * (edges_[i] + edges_[i + 1]);
  return c;
}

int BinningSpec::bin_of(double sample) const {
  if (sample < edges_.front() || sample > edges_.back()) return -1;
  if (sample == edges_.back()) return bin_count() - 1;  // top edge inclusive
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), sample);
  return static_cast<int>(it - edges_.begin()) - 1;
}

std::vector<int> quantize(const std::vector<double>& trace,
                          const BinningSpec& binning) {
  std::vector<int> states;
  states.reserve(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const int bin = binning.bin_of(trace[k]);
    if (bin < 0) {
      throw Error(ErrorCategory::model,
                  "sample " + std::to_string(k) + " (" + format_power(trace[k]) +
                      ") lies outside the binning range [" +
                      format_power(binning.edges().front()) + ", " +
                      format_power(binning.edges().back()) + "]");
    }
    states.push_back(bin);
  }
  return states;
}

TransitionCounts estimate_transition_matrix(const std::vector<int>& states,
                                            int n_bins) {
  return estimate_transition_matrix(std::vector<std::vector<int>>{states}, n_bins);
}

TransitionCounts estimate_transition_matrix(
    const std::vector<std::vector<int>>& segments, int n_bins) {
  if (n_bins < 1) {
    throw Error(ErrorCategory::model, "bin count must be positive");
  }
  TransitionCounts result;
  result.counts = Eigen::MatrixXi::Zero(n_bins, n_bins);
  for (const auto& segment : segments) {
    for (std::size_t k = 0; k + 1 < segment.size(); ++k) {
      const int from = segment[k];
      const int to = segment[k + 1];
      if (from < 0 || from >= n_bins || to < 0 || to >= n_bins) {
        throw Error(ErrorCategory::model, "state index out of range");
      }
      result.counts(from, to) += 1;
    }
  }
  result.t_matrix = Eigen::MatrixXd::Zero(n_bins, n_bins);
  for (int i = 0; i < n_bins; ++i) {
    const long row_total = result.counts.row(i).sum();
    if (row_total == 0) {
      result.zero_rows.push_back(i);
    } else {
      result.t_matrix.row(i) = result.counts.row(i).cast<double>() / row_total;
    }
  }
  return result;
}

RateMatrix to_rate_matrix(const Eigen::MatrixXd& t_matrix, double tau) {
  if (!(tau > 0.0)) {
    throw Error(ErrorCategory::model, "sampling interval tau must be positive");
  }
  const auto n = t_matrix.rows();
  if (t_matrix.cols() != n || n == 0) {
    throw Error(ErrorCategory::model, "transition matrix must be square");
  }
  if ((t_matrix.array() < 0.0).any()) {
    throw Error(ErrorCategory::model, "transition matrix has negative entries");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(t_matrix.row(i).sum() - 1.0) > 1e-9) {
      throw Error(ErrorCategory::model,
                  "transition matrix row " + std::to_string(i) + " does not sum to 1");
    }
  }
  // Off-diagonals T_ij / tau; diagonal balances the row to an exact zero sum.
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double off_sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      q(i, j) = t_matrix(i, j) / tau;
      off_sum += q(i, j);
    }
    q(i, i) = -off_sum;
  }
  return RateMatrix(std::move(q));
}

Eigen::VectorXd FittedModel::retained_centers() const {
  const Eigen::VectorXd all = binning.centers();
  Eigen::VectorXd centers(retained_bins.size());
  for (std::size_t k = 0; k < retained_bins.size(); ++k) {
    centers(k) = all(retained_bins[k]);
  }
  return centers;
}

NetGenModel build_model(const FittedModel& fitted, double demand) {
  if (!(demand > 0.0)) {
    throw Error(ErrorCategory::model, "demand must be positive");
  }
  const Eigen::VectorXd centers = fitted.retained_centers();
  Eigen::VectorXd rates(centers.size());
  bool any_positive = false;
  bool any_negative = false;
  for (int i = 0; i < centers.size(); ++i) {
    rates(i) = centers(i) - demand;
    const double scale = std::max({std::abs(centers(i)), demand, 1.0});
    if (std::abs(rates(i)) <= 1e-12 * scale) {
      throw Error(ErrorCategory::model,
                  "demand " + format_power(demand) + " equals bin center " +
                      format_power(centers(i)) +
                      ", producing a zero net-generation state; shift the demand "
                      "or merge bins");
    }
    (rates(i) > 0.0 ? any_positive : any_negative) = true;
  }
  if (!any_positive || !any_negative) {
    throw Error(ErrorCategory::model,
                "degenerate model: all net generation rates have the same sign; "
                "choose a demand strictly inside the generation range");
  }
  std::vector<std::string> labels;
  labels.reserve(centers.size());
  for (std::size_t k = 0; k < fitted.retained_bins.size(); ++k) {
    labels.push_back("bin_" + std::to_string(fitted.retained_bins[k]));
  }
  return NetGenModel(fitted.q_matrix, std::move(rates), std::move(labels));
}

FitResult fit_pipeline(const std::vector<double>& trace, double sample_interval,
                       const BinningSpec& binning, double demand,
                       const FitOptions& options) {
  return fit_pipeline(std::vector<std::vector<double>>{trace}, sample_interval,
                      binning, demand, options);
}

FitResult fit_pipeline(const std::vector<std::vector<double>>& trace_segments,
                       double sample_interval, const BinningSpec& binning,
                       double demand, const FitOptions& options) {
  if (!(sample_interval > 0.0)) {
    throw Error(ErrorCategory::model, "sample interval must be positive");
  }
  if (options.pseudo_count < 0.0) {
    throw Error(ErrorCategory::model, "pseudo count must be nonnegative");
  }
  const int n_bins = binning.bin_count();

  std::vector<std::vector<int>> state_segments;
  state_segments.reserve(trace_segments.size());
  Eigen::VectorXi visits = Eigen::VectorXi::Zero(n_bins);
  for (const auto& segment : trace_segments) {
    state_segments.push_back(quantize(segment, binning));
    for (int s : state_segments.back()) visits(s) += 1;
  }

  const TransitionCounts raw = estimate_transition_matrix(state_segments, n_bins);
  if (raw.counts.sum() == 0) {
    throw Error(ErrorCategory::model,
                "insufficient data: trace provides no transitions "
                "(fewer than 2 samples)");
  }

  std::vector<char> retained(n_bins, 1);
  std::vector<DroppedState> dropped;
  for (int b = 0; b < n_bins; ++b) {
    if (visits(b) == 0) {
      retained[b] = 0;
      dropped.push_back({b, "unvisited"});
    }
  }

  // Rows left without outgoing transitions (e.g. a terminal visit, or all
  // transitions pointing at dropped states) are dropped in turn.
  const bool smoothed = options.pseudo_count > 0.0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int b = 0; b < n_bins; ++b) {
      if (!retained[b] || smoothed) continue;
      long out = 0;
      for (int c = 0; c < n_bins; ++c) {
        if (retained[c]) out += raw.counts(b, c);
      }
      if (out == 0) {
        retained[b] = 0;
        dropped.push_back({b, "no outgoing transitions among retained states"});
        changed = true;
      }
    }
  }

  std::vector<int> retained_bins;
  for (int b = 0; b < n_bins; ++b) {
    if (retained[b]) retained_bins.push_back(b);
  }
  const int n = static_cast<int>(retained_bins.size());
  if (n < 2) {
    throw Error(ErrorCategory::model,
                "fewer than 2 retained states after dropping empty bins");
  }

  Eigen::MatrixXi counts(n, n);
  Eigen::VectorXi retained_visits(n);
  for (int i = 0; i < n; ++i) {
    retained_visits(i) = visits(retained_bins[i]);
    for (int j = 0; j < n; ++j) {
      counts(i, j) = raw.counts(retained_bins[i], retained_bins[j]);
    }
  }

  std::vector<std::string> warnings;
  for (const auto& d : dropped) {
    warnings.push_back("dropped bin " + std::to_string(d.bin) + ": " + d.reason);
  }
  for (int i = 0; i < n; ++i) {
    const long row_total = counts.row(i).sum();
    if (row_total < options.min_row_transitions) {
      throw Error(ErrorCategory::model,
                  "insufficient data: state for bin " +
                      std::to_string(retained_bins[i]) + " has only " +
                      std::to_string(row_total) + " transitions (threshold " +
                      std::to_string(options.min_row_transitions) + ")");
    }
  }

  Eigen::MatrixXd t(n, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXd row =
        counts.row(i).cast<double>().array() + options.pseudo_count;
    t.row(i) = row / row.sum();
  }

  // Strong connectivity of the retained graph, reported in fitting terms
  // (RateMatrix re-validates the same property).
  const auto reaches_all = [&](bool backward) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int found = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        if (seen[v] || u == v) continue;
        if ((backward ? t(v, u) : t(u, v)) > 0.0) {
          seen[v] = 1;
          ++found;
          stack.push_back(v);
        }
      }
    }
    return found == n;
  };
  if (!reaches_all(false) || !reaches_all(true)) {
    throw Error(ErrorCategory::model,
                "retained transition graph is not strongly connected; the trace "
                "does not support a single irreducible chain");
  }

  FittedModel fitted{binning,
                     t,
                     sample_interval,
                     to_rate_matrix(t, sample_interval),
                     retained_bins,
                     dropped,
                     retained_visits,
                     counts};

  const double taylor = sample_interval * fitted.q_matrix.max_exit_rate();
  if (taylor > options.taylor_warn_threshold) {
    warnings.push_back(
        "tau * max exit rate = " + format_power(taylor) +
        " exceeds " + format_power(options.taylor_warn_threshold) +
        "; the first-order rate-matrix approximation may be inaccurate");
  }

  NetGenModel model = build_model(fitted, demand);
  return FitResult{std::move(fitted), std::move(model), std::move(warnings)};
}

}  // namespace fluidq
