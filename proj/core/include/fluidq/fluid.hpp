#pragma once

#include <Eigen/Dense>

#include "fluidq/ctmc.hpp"

namespace fluidq {

// Spectral representation of the stationary joint distribution
// F_i(x) = P[b <= x, X = i] of the battery/chain pair on [0, bmax]:
//
//   F(x) = sum_j coeff_j * exp(lambda_j * (x - anchor_j)) * phi_j
//
// where (lambda_j, phi_j) are the eigenpairs of R^-1 Q^T and anchor_j is
// bmax for growing modes (lambda_j > 0) and 0 otherwise, so every exponent
// evaluated on [0, bmax] is nonpositive.
class SpectralSolution {
 public:
  SpectralSolution(NetGenModel model, double bmax, Eigen::VectorXd eigenvalues,
                   Eigen::MatrixXd eigenvectors, Eigen::VectorXd coefficients,
                   Eigen::VectorXd invariant);

  const NetGenModel& model() const { return model_; }
  double bmax() const { return bmax_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  const Eigen::VectorXd& invariant() const { return invariant_; }

  // (F_i(x))_i for x in [0, bmax]; throws outside the range.
  Eigen::VectorXd cdf(double x) const;

 private:
  NetGenModel model_;
  double bmax_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;  // columns phi_j
  Eigen::VectorXd coefficients_;
  Eigen::VectorXd invariant_;
};

struct ReliabilityReport {
  double lolp = 0.0;           // P[battery empty] = sum_{i in S-} F_i(0)
  double llr = 0.0;            // unserved power: sum_{i in S-} F_i(0) (-r_i)
  double overflow_prob = 0.0;  // P[battery full]  = sum_{i in S+} (pi_i - F_i(bmax))
  double overflow_rate = 0.0;  // wasted power:     sum_{i in S+} r_i (pi_i - F_i(bmax))
  double drift = 0.0;
  double bmax = 0.0;
};

// Exact stationary solution of the finite-buffer fluid equations. Errors:
// zero drift (drift), non-real or degenerate spectrum, ill-conditioned
// boundary system (numeric).
SpectralSolution solve_stationary(const NetGenModel& model, double bmax);

ReliabilityReport reliability(const SpectralSolution& solution);

// Closed-form LOLP for the alternating two-state chain: generation toggles
// between 0 and g at rates a (leaving the off state) and b (leaving the on
// state), against constant demand d in (0, g).
double two_state_lolp(double a, double b, double g, double d, double bmax);

struct LolpLowerBound {
  double bound = 0.0;  // -drift / -min_rate
  bool tight = false;  // true iff there is a single deficit state
};

// Valid only for negative drift; no finite battery can beat this bound.
LolpLowerBound lolp_lower_bound(const NetGenModel& model);

}  // namespace fluidq
