#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fluidq/ctmc.hpp"

namespace fluidq {

// Power quantization grid. Bin i covers [edges[i], edges[i+1]), with the
// topmost edge inclusive; centers are the interval midpoints.
class BinningSpec {
 public:
  explicit BinningSpec(std::vector<double> edges);

  int bin_count() const { return static_cast<int>(edges_.size()) - 1; }
  const std::vector<double>& edges() const { return edges_; }
  Eigen::VectorXd centers() const;

  // Bin index of a sample, or -1 when out of range.
  int bin_of(double sample) const;

 private:
  std::vector<double> edges_;
};

std::vector<int> quantize(const std::vector<double>& trace,
                          const BinningSpec& binning);

struct TransitionCounts {
  Eigen::MatrixXd t_matrix;     // rows with no outgoing transitions left zero
  Eigen::MatrixXi counts;       // raw transition counts
  std::vector<int> zero_rows;   // flagged rows (no outgoing transitions)
};

// Maximum-likelihood transition matrix: row i holds the empirical
// conditional frequencies of transitions out of state i.
TransitionCounts estimate_transition_matrix(const std::vector<int>& states,
                                            int n_bins);

// Segmented variant: transitions are never counted across segment breaks
// (used when a time-window filter leaves gaps in a trace).
TransitionCounts estimate_transition_matrix(
    const std::vector<std::vector<int>>& segments, int n_bins);

// First-order Taylor step Q = (T - I) / tau; rows sum to zero exactly.
RateMatrix to_rate_matrix(const Eigen::MatrixXd& t_matrix, double tau);

struct DroppedState {
  int bin = -1;
  std::string reason;
};

struct FittedModel {
  BinningSpec binning;
  Eigen::MatrixXd t_matrix;  // over retained states
  double tau = 0.0;
  RateMatrix q_matrix;
  std::vector<int> retained_bins;  // original bin index per retained state
  std::vector<DroppedState> dropped_states;
  Eigen::VectorXi visit_counts;         // per retained state
  Eigen::MatrixXi transition_counts;    // retained x retained

  Eigen::VectorXd retained_centers() const;
};

// Net-generation model at a constant demand: rate_i = center_i - demand.
NetGenModel build_model(const FittedModel& fitted, double demand);

struct FitOptions {
  int min_row_transitions = 10;       // error below this per retained row
  double pseudo_count = 0.0;          // optional Laplace smoothing
  double taylor_warn_threshold = 0.1; // warn when tau * max exit rate exceeds
};

struct FitResult {
  FittedModel fitted;
  NetGenModel model;
  std::vector<std::string> warnings;
};

FitResult fit_pipeline(const std::vector<std::vector<double>>& trace_segments,
                       double sample_interval, const BinningSpec& binning,
                       double demand, const FitOptions& options = {});

FitResult fit_pipeline(const std::vector<double>& trace,
                       double sample_interval, const BinningSpec& binning,
                       double demand, const FitOptions& options = {});

}  // namespace fluidq
