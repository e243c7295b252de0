#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fluidq/ctmc.hpp"

namespace fluidq {

struct SizingResult {
  double target_lolp = 0.0;
  double lambda = 0.0;
  double estimate_bmax = 0.0;              // log(1/target) / lambda
  std::optional<double> exact_bmax;        // bisection on the fluid solver
  std::optional<double> offset;            // exact - estimate
  std::vector<std::string> warnings;
};

// Battery size from the decay-rate approximation: log(1/delta) / lambda.
double size_estimate(double lambda, double delta);

// Additional battery needed to shrink the LOLP by a factor epsilon:
// log(1/epsilon) / lambda.
double incremental_size(double lambda, double epsilon);

struct SizeExactOptions {
  double relative_tolerance = 1e-6;
  // Negative-drift targets above the LOLP lower bound are outside the
  // asymptotic theory; opt in to solve them by plain bisection.
  bool allow_negative_drift = false;
};

// Smallest bmax with solver LOLP <= delta, by bisection (LOLP is strictly
// decreasing in bmax). Unattainable targets (negative drift, delta at or
// below the lower bound) raise a drift error.
double size_exact(const NetGenModel& model, double delta,
                  const SizeExactOptions& options = {});

SizingResult sizing_report(const NetGenModel& model, double delta,
                           bool with_exact,
                           const SizeExactOptions& options = {});

// Least-squares estimate of log c in LOLP ~ c exp(-lambda bmax) over a
// bmax grid; reported only, never used inside size_estimate.
double estimate_log_prefactor(const NetGenModel& model,
                              const std::vector<double>& bmax_grid);

}  // namespace fluidq
