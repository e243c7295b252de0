#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "fluidq/ctmc.hpp"

namespace fluidq {

// Spectral radius of a nonnegative irreducible matrix: power iteration with
// Collatz-Wielandt bounds, dense eigensolver fallback when the iteration
// stalls.
double perron_eigenvalue(const Eigen::MatrixXd& m);

// Scaled cumulant generating function of the sampled reversed net flow,
//   Lambda(theta) = log rho(M(theta)),  M_lm(theta) = P_lm * q / (q + theta r_l),
// finite on the open interval (-q/max_rate, -q/min_rate) and +infinity
// outside it.
class CgfEvaluator {
 public:
  explicit CgfEvaluator(const NetGenModel& model,
                        std::optional<double> q_rate = std::nullopt);

  double q_rate() const { return chain_.q_rate; }
  const Eigen::MatrixXd& p_matrix() const { return chain_.p_matrix; }
  double theta_min() const { return theta_min_; }
  double theta_max() const { return theta_max_; }

  // M(theta); valid only inside the open domain.
  Eigen::MatrixXd weight_matrix(double theta) const;

  // Lambda(theta); +infinity outside (theta_min, theta_max).
  double operator()(double theta) const;

 private:
  UniformizedChain chain_;
  Eigen::VectorXd rates_;
  double theta_min_;
  double theta_max_;
};

struct DecayRateReport {
  double lambda_ld = 0.0;   // root of Lambda, large-deviations route
  double lambda_eig = 0.0;  // smallest positive eigenvalue of R^-1 Q^T
  double agreement_gap = 0.0;
  double theta_min = 0.0;
  double theta_max = 0.0;
  std::vector<std::pair<double, double>> cgf_samples;  // (theta, Lambda(theta))
};

// Decay rate of LOLP in bmax for positive-drift models, via the unique
// positive root of Lambda (bisection).
double decay_rate_ld(const NetGenModel& model);

// Same quantity via the smallest strictly positive eigenvalue of R^-1 Q^T.
double decay_rate_eig(const NetGenModel& model);

// Both routes plus a Lambda(theta) sample table for reports.
DecayRateReport decay_rate_report(const NetGenModel& model,
                                  int cgf_sample_count = 41);

}  // namespace fluidq
