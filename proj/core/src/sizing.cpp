#include "fluidq/sizing.hpp"

#include <cmath>

#include "fluidq/error.hpp"
#include "fluidq/fluid.hpp"
#include "fluidq/ldp.hpp"

namespace fluidq {

namespace {

void check_target(double value, const char* name) {
  if (!(value > 0.0 && value <= 1.0)) {
    throw Error(ErrorCategory::model,
                std::string(name) + " must lie in (0, 1]");
  }
}

double lolp_at(const NetGenModel& model, double bmax) {
  return reliability(solve_stationary(model, bmax)).lolp;
}

}  // namespace

double size_estimate(double lambda, double delta) {
  if (!(lambda > 0.0)) {
    throw Error(ErrorCategory::model, "decay rate lambda must be positive");
  }
  check_target(delta, "target LOLP delta");
  return std::log(1.0 / delta) / lambda;
}

double incremental_size(double lambda, double epsilon) {
  if (!(lambda > 0.0)) {
    throw Error(ErrorCategory::model, "decay rate lambda must be positive");
  }
  check_target(epsilon, "shrink factor epsilon");
  return std::log(1.0 / epsilon) / lambda;
}

double size_exact(const NetGenModel& model, double delta,
                  const SizeExactOptions& options) {
  check_target(delta, "target LOLP delta");
  const double model_drift = drift(model);

  double scale;  // initial upper-bracket guess
  if (model_drift > 0.0) {
    scale = 4.0 * size_estimate(decay_rate_eig(model), delta);
  } else {
    const LolpLowerBound bound = lolp_lower_bound(model);
    if (delta <= bound.bound) {
      throw Error(ErrorCategory::drift,
                  "target LOLP " + std::to_string(delta) +
                      " is unattainable at any battery size: negative drift "
                      "bounds LOLP below by " + std::to_string(bound.bound));
    }
    if (!options.allow_negative_drift) {
      throw Error(ErrorCategory::drift,
                  "model has negative drift; the target exceeds the LOLP lower "
                  "bound and is solvable by bisection, but outside the "
                  "asymptotic sizing theory. Enable negative-drift mode to "
                  "proceed.");
    }
    scale = 1.0;
  }

  // LOLP(bmax) decreases strictly in bmax, from the no-storage value at
  // bmax -> 0+ down to its limit; bracket the crossing and bisect.
  double lo = 1e-9 * scale;
  if (lolp_at(model, lo) <= delta) return lo;  // target met without storage

  double hi = scale;
  int expansions = 0;
  while (lolp_at(model, hi) > delta) {
    hi *= 2.0;
    if (++expansions > 200) {
      throw Error(ErrorCategory::numeric,
                  "failed to bracket the target LOLP while expanding bmax");
    }
  }

  while (hi - lo > options.relative_tolerance * hi) {
    const double mid = 0.5 * (lo + hi);
    (lolp_at(model, mid) > delta ? lo : hi) = mid;
  }
  return hi;
}

SizingResult sizing_report(const NetGenModel& model, double delta,
                           bool with_exact, const SizeExactOptions& options) {
  SizingResult result;
  result.target_lolp = delta;
  result.lambda = decay_rate_eig(model);
  result.estimate_bmax = size_estimate(result.lambda, delta);
  if (with_exact) {
    result.exact_bmax = size_exact(model, delta, options);
    result.offset = *result.exact_bmax - result.estimate_bmax;
  }
  return result;
}

double estimate_log_prefactor(const NetGenModel& model,
                              const std::vector<double>& bmax_grid) {
  if (bmax_grid.empty()) {
    throw Error(ErrorCategory::model, "prefactor estimation needs a bmax grid");
  }
  const double lambda = decay_rate_eig(model);
  double sum = 0.0;
  for (double bmax : bmax_grid) {
    sum += std::log(lolp_at(model, bmax)) + lambda * bmax;
  }
  return sum / static_cast<double>(bmax_grid.size());
}

}  // namespace fluidq
