#include "fluidq/ldp.hpp"

#include <cmath>
#include <limits>

#include "fluidq/error.hpp"

namespace fluidq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxPowerIterations = 100000;

double dense_spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCategory::numeric, "spectral radius eigensolver failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double perron_eigenvalue(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 1) return m(0, 0);

  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  for (int it = 0; it < kMaxPowerIterations; ++it) {
    Eigen::VectorXd mv = m * v;
    // For positive v, the ratios (Mv)_i / v_i bracket the PF eigenvalue.
    const Eigen::ArrayXd ratios = mv.array() / v.array();
    const double lo = ratios.minCoeff();
    const double hi = ratios.maxCoeff();
    if (!(lo > 0.0) || !std::isfinite(hi)) break;  // fall back
    if (hi - lo <= 1e-12 * hi) return 0.5 * (lo + hi);
    v = mv / mv.maxCoeff();
  }
  return dense_spectral_radius(m);
}

CgfEvaluator::CgfEvaluator(const NetGenModel& model, std::optional<double> q_rate)
    : chain_(uniformize(model.q_matrix(), q_rate)),
      rates_(model.rates()),
      theta_min_(-chain_.q_rate / model.max_rate()),
      theta_max_(-chain_.q_rate / model.min_rate()) {}

Eigen::MatrixXd CgfEvaluator::weight_matrix(double theta) const {
  Eigen::MatrixXd m = chain_.p_matrix;
  for (Eigen::Index l = 0; l < rates_.size(); ++l) {
    m.row(l) *= chain_.q_rate / (chain_.q_rate + theta * rates_(l));
  }
  return m;
}

double CgfEvaluator::operator()(double theta) const {
  if (theta == 0.0) return 0.0;  // rho(P) = 1 for row-stochastic P
  if (!(theta > theta_min_ && theta < theta_max_)) return kInf;
  return std::log(perron_eigenvalue(weight_matrix(theta)));
}

double decay_rate_ld(const NetGenModel& model) {
  if (!(drift(model) > 0.0)) {
    throw Error(ErrorCategory::drift, "decay rate is defined only for positive drift");
  }
  const CgfEvaluator cgf(model);

  // Lambda is convex with Lambda(0) = 0 and Lambda'(0) < 0, and blows up at
  // the right endpoint, so it has a single positive root.
  const double width = cgf.theta_max() - cgf.theta_min();
  const double margin = 1e-9 * width;
  double lo = margin;
  double hi = cgf.theta_max() - margin;
  if (!(cgf(lo) < 0.0)) {
    throw Error(ErrorCategory::numeric,
                "Lambda not negative near zero: decay rate indistinguishable from 0");
  }
  if (!(cgf(hi) > 0.0)) {
    throw Error(ErrorCategory::numeric, "Lambda not positive near the domain endpoint");
  }
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (cgf(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double decay_rate_eig(const NetGenModel& model) {
  if (!(drift(model) > 0.0)) {
    throw Error(ErrorCategory::drift, "decay rate is defined only for positive drift");
  }
  const int n = model.size();
  Eigen::MatrixXd a = model.q_matrix().entries().transpose();
  for (int i = 0; i < n; ++i) a.row(i) /= model.rates()(i);
  const double a_norm = a.cwiseAbs().rowwise().sum().maxCoeff();

  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCategory::numeric, "eigendecomposition failed to converge");
  }
  const Eigen::VectorXcd values = es.eigenvalues();
  const double spectral_radius = values.cwiseAbs().maxCoeff();

  int best = -1;
  for (int j = 0; j < n; ++j) {
    if (std::abs(values(j).imag()) > 1e-9 * spectral_radius) continue;
    const double lambda = values(j).real();
    if (lambda <= 1e-9 * spectral_radius) continue;  // skip the structural zero
    if (best < 0 || lambda < values(best).real()) best = j;
  }
  if (best < 0) {
    throw Error(ErrorCategory::numeric,
                "no strictly positive eigenvalue of R^-1 Q^T found");
  }

  const double lambda = values(best).real();
  const Eigen::VectorXcd v = es.eigenvectors().col(best);
  const double residual = (a * v - lambda * v).cwiseAbs().maxCoeff() / v.cwiseAbs().maxCoeff();
  if (residual > 1e-9 * a_norm) {
    throw Error(ErrorCategory::numeric, "decay-rate eigenpair residual too large");
  }
  return lambda;
}

DecayRateReport decay_rate_report(const NetGenModel& model, int cgf_sample_count) {
  DecayRateReport report;
  report.lambda_ld = decay_rate_ld(model);
  report.lambda_eig = decay_rate_eig(model);
  report.agreement_gap = std::abs(report.lambda_ld - report.lambda_eig);

  const CgfEvaluator cgf(model);
  report.theta_min = cgf.theta_min();
  report.theta_max = cgf.theta_max();
  if (cgf_sample_count > 1) {
    // Sample away from the endpoints, where Lambda diverges.
    const double width = cgf.theta_max() - cgf.theta_min();
    const double lo = cgf.theta_min() + 0.02 * width;
    const double step = 0.96 * width / (cgf_sample_count - 1);
    report.cgf_samples.reserve(cgf_sample_count);
    for (int k = 0; k < cgf_sample_count; ++k) {
      const double theta = lo + k * step;
      report.cgf_samples.emplace_back(theta, cgf(theta));
    }
  }
  return report;
}

}  // namespace fluidq
