#include "fluidq/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>

#include "fluidq/error.hpp"

namespace fluidq {

namespace {

constexpr double kDriftTolerance = 1e-12;

double operator_inf_norm(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

// Extract a real eigenvector from a possibly complex one by rotating out
// the phase of its largest component.
Eigen::VectorXd realize_eigenvector(const Eigen::VectorXcd& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const std::complex<double> phase = std::conj(v(imax)) / std::abs(v(imax));
  Eigen::VectorXd real = (v * phase).real();
  real.normalize();
  return real;
}

}  // namespace

SpectralSolution::SpectralSolution(NetGenModel model, double bmax,
                                   Eigen::VectorXd eigenvalues,
                                   Eigen::MatrixXd eigenvectors,
                                   Eigen::VectorXd coefficients,
                                   Eigen::VectorXd invariant)
    : model_(std::move(model)),
      bmax_(bmax),
      eigenvalues_(std::move(eigenvalues)),
      eigenvectors_(std::move(eigenvectors)),
      coefficients_(std::move(coefficients)),
      invariant_(std::move(invariant)) {}

Eigen::VectorXd SpectralSolution::cdf(double x) const {
  if (!(x >= 0.0 && x <= bmax_)) {
    throw Error(ErrorCategory::model,
                "cdf argument " + std::to_string(x) + " outside [0, bmax]");
  }
  const int n = model_.size();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    const double anchor = eigenvalues_(j) > 0.0 ? bmax_ : 0.0;
    f += coefficients_(j) * std::exp(eigenvalues_(j) * (x - anchor)) *
         eigenvectors_.col(j);
  }
  return f;
}

SpectralSolution solve_stationary(const NetGenModel& model, double bmax) {
  if (!(bmax > 0.0)) {
    throw Error(ErrorCategory::model, "bmax must be positive");
  }
  const int n = model.size();
  const Eigen::VectorXd pi = invariant_distribution(model.q_matrix());
  const double delta = pi.dot(model.rates());
  const double rate_scale = pi.dot(model.rates().cwiseAbs());
  if (std::abs(delta) <= kDriftTolerance * rate_scale) {
    throw Error(ErrorCategory::drift,
                "zero-drift models are unsupported by the stationary solver");
  }

  // A = R^-1 Q^T; row i of Q^T scaled by 1/r_i.
  Eigen::MatrixXd a = model.q_matrix().entries().transpose();
  for (int i = 0; i < n; ++i) a.row(i) /= model.rates()(i);
  const double a_norm = operator_inf_norm(a);

  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCategory::numeric, "eigendecomposition failed to converge");
  }
  const Eigen::VectorXcd raw_values = es.eigenvalues();
  const double spectral_radius = raw_values.cwiseAbs().maxCoeff();

  if ((raw_values.imag().cwiseAbs().array() > 1e-9 * spectral_radius).any()) {
    throw Error(ErrorCategory::numeric,
                "non-real spectrum of R^-1 Q^T (model not reversible?)");
  }

  Eigen::VectorXd values = raw_values.real();
  Eigen::MatrixXd vectors(n, n);
  for (int j = 0; j < n; ++j) {
    vectors.col(j) = realize_eigenvector(es.eigenvectors().col(j));
    const double residual =
        (a * vectors.col(j) - values(j) * vectors.col(j)).cwiseAbs().maxCoeff();
    if (residual > 1e-9 * a_norm) {
      throw Error(ErrorCategory::numeric,
                  "eigenpair residual too large (defective spectrum?)");
    }
  }

  // Exactly one structural zero eigenvalue (eigenvector proportional to pi);
  // any other near-zero or near-coincident eigenvalue leaves the coefficients
  // ill-determined.
  Eigen::Index zero_index = 0;
  values.cwiseAbs().minCoeff(&zero_index);
  if (std::abs(values(zero_index)) > 1e-12 * spectral_radius) {
    throw Error(ErrorCategory::numeric, "no zero eigenvalue found for R^-1 Q^T");
  }
  values(zero_index) = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j != zero_index && std::abs(values(j)) < 1e-12 * spectral_radius) {
      throw Error(ErrorCategory::numeric,
                  "numerically degenerate spectrum: repeated zero eigenvalue");
    }
    for (int k = j + 1; k < n; ++k) {
      if (std::abs(values(j) - values(k)) < 1e-12 * spectral_radius) {
        throw Error(ErrorCategory::numeric,
                    "defective spectrum: eigenvalues coincide");
      }
    }
  }

  // Boundary conditions as an n x n system in the mode coefficients:
  // rows for i in S+ pin F_i(0) = 0, rows for i in S- pin F_i(bmax) = pi_i.
  Eigen::MatrixXd boundary(n, n);
  Eigen::VectorXd rhs(n);
  int row = 0;
  for (int i : model.surplus_states()) {
    for (int j = 0; j < n; ++j) {
      const double e0 = values(j) > 0.0 ? std::exp(-values(j) * bmax) : 1.0;
      boundary(row, j) = e0 * vectors(i, j);
    }
    rhs(row++) = 0.0;
  }
  for (int i : model.deficit_states()) {
    for (int j = 0; j < n; ++j) {
      const double eb = values(j) > 0.0 ? 1.0 : std::exp(values(j) * bmax);
      boundary(row, j) = eb * vectors(i, j);
    }
    rhs(row++) = pi(i);
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(boundary);
  const Eigen::VectorXd coeff = lu.solve(rhs);
  const double residual = (boundary * coeff - rhs).cwiseAbs().maxCoeff();
  if (!coeff.allFinite() || residual > 1e-9) {
    throw Error(ErrorCategory::numeric,
                "boundary system is ill-conditioned (residual " +
                    std::to_string(residual) + ")");
  }

  return SpectralSolution(model, bmax, std::move(values), std::move(vectors),
                          coeff, pi);
}

ReliabilityReport reliability(const SpectralSolution& solution) {
  const NetGenModel& model = solution.model();
  const Eigen::VectorXd f0 = solution.cdf(0.0);
  const Eigen::VectorXd fb = solution.cdf(solution.bmax());
  const Eigen::VectorXd& pi = solution.invariant();

  ReliabilityReport report;
  report.bmax = solution.bmax();
  report.drift = pi.dot(model.rates());
  for (int i : model.deficit_states()) {
    const double mass = std::max(f0(i), 0.0);
    report.lolp += mass;
    report.llr += mass * (-model.rates()(i));
  }
  for (int i : model.surplus_states()) {
    const double atom = std::max(pi(i) - fb(i), 0.0);
    report.overflow_prob += atom;
    report.overflow_rate += atom * model.rates()(i);
  }
  return report;
}

double two_state_lolp(double a, double b, double g, double d, double bmax) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error(ErrorCategory::model, "transition rates a, b must be positive");
  }
  if (!(d > 0.0 && d < g)) {
    throw Error(ErrorCategory::model, "demand must satisfy 0 < d < g");
  }
  if (!(bmax >= 0.0)) {
    throw Error(ErrorCategory::model, "bmax must be nonnegative");
  }
  const double delta = (a * g - a * d - b * d) / (a + b);
  if (delta == 0.0) {
    throw Error(ErrorCategory::drift, "two-state closed form degenerates at zero drift");
  }
  const double growth = (a + b) * delta / ((g - d) * d);
  return (-delta / d) / (1.0 - (a * g - a * d) / (b * d) * std::exp(growth * bmax));
}

LolpLowerBound lolp_lower_bound(const NetGenModel& model) {
  const double delta = drift(model);
  if (!(delta < 0.0)) {
    throw Error(ErrorCategory::drift, "LOLP lower bound applies only to negative drift");
  }
  LolpLowerBound result;
  result.bound = -delta / -model.min_rate();
  result.tight = model.deficit_states().size() == 1;
  return result;
}

}  // namespace fluidq
