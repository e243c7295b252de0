#include "support/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace fluidq::testing {

Eigen::VectorXd power_iteration_pi(const Eigen::MatrixXd& p, double tol,
                                   int max_iterations) {
  const int n = static_cast<int>(p.rows());
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::RowVectorXd next = pi * p;
    next /= next.sum();
    const double change = (next - pi).cwiseAbs().maxCoeff();
    pi = next;
    if (change < tol) return pi.transpose();
  }
  throw std::runtime_error("power iteration for pi did not converge");
}

Eigen::MatrixXd rk4_transition(const Eigen::MatrixXd& a, double x, int steps) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  const double h = x / steps;
  for (int k = 0; k < steps; ++k) {
    const Eigen::MatrixXd k1 = a * phi;
    const Eigen::MatrixXd k2 = a * (phi + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = a * (phi + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = a * (phi + h * k3);
    phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return phi;
}

OdeStationaryOracle::OdeStationaryOracle(const NetGenModel& model, double bmax,
                                         int steps_per_unit)
    : bmax_(bmax) {
  const int n = model.size();
  a_ = model.q_matrix().entries().transpose();
  for (int i = 0; i < n; ++i) a_.row(i) /= model.rates()(i);
  steps_ = std::max(2000, static_cast<int>(steps_per_unit * bmax));

  const Eigen::VectorXd pi = invariant_distribution(model.q_matrix());
  const Eigen::MatrixXd phi = rk4_transition(a_, bmax, steps_);

  // F(0) vanishes on S+; shoot for the S- components from the terminal
  // conditions F_i(bmax) = pi_i, i in S-.
  const auto& deficit = model.deficit_states();
  const int m = static_cast<int>(deficit.size());
  Eigen::MatrixXd system(m, m);
  Eigen::VectorXd rhs(m);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) system(r, c) = phi(deficit[r], deficit[c]);
    rhs(r) = pi(deficit[r]);
  }
  const Eigen::VectorXd u = Eigen::FullPivLU<Eigen::MatrixXd>(system).solve(rhs);

  f0_ = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < m; ++c) f0_(deficit[c]) = u(c);
}

Eigen::VectorXd OdeStationaryOracle::cdf(double x) const {
  if (x == 0.0) return f0_;
  const int steps = std::max(1, static_cast<int>(steps_ * x / bmax_));
  return rk4_transition(a_, x, steps) * f0_;
}

double OdeStationaryOracle::lolp() const { return f0_.sum(); }

NetGenModel random_reversible_model(TestRng& rng, int n, bool positive_drift) {
  Eigen::VectorXd pi(n);
  for (int i = 0; i < n; ++i) pi(i) = rng.uniform(0.5, 1.5);
  pi /= pi.sum();

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = rng.uniform(0.2, 1.2);
      q(i, j) = w / pi(i);  // detailed balance: pi_i q_ij = pi_j q_ji
      q(j, i) = w / pi(j);
    }
  }
  for (int i = 0; i < n; ++i) q(i, i) = -q.row(i).sum();

  for (int attempt = 0; attempt < 200; ++attempt) {
    Eigen::VectorXd rates(n);
    for (int i = 0; i < n; ++i) {
      const double magnitude = rng.uniform(0.3, 2.0);
      const bool negative = i == 0 ? true : (i == 1 ? false : rng.uniform() < 0.5);
      rates(i) = negative ? -magnitude : magnitude;
    }
    const double delta = pi.dot(rates);
    if (std::abs(delta) < 0.02 * pi.dot(rates.cwiseAbs())) continue;
    if ((delta > 0.0) != positive_drift) rates = -rates;
    return NetGenModel(RateMatrix(q), rates);
  }
  throw std::runtime_error("failed to draw a model with usable drift");
}

NetGenModel two_state_model(double a, double b, double g, double d) {
  Eigen::MatrixXd q(2, 2);
  q << -a, a, b, -b;
  Eigen::VectorXd rates(2);
  rates << -d, g - d;
  return NetGenModel(RateMatrix(q), rates);
}

double least_squares_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace fluidq::testing
