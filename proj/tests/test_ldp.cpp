#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "fluidq/error.hpp"
#include "fluidq/ldp.hpp"
#include "support/oracles.hpp"

using namespace fluidq;
using testing::TestRng;

TEST_CASE("perron eigenvalue on known matrices") {
  Eigen::MatrixXd swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK(perron_eigenvalue(swap) == doctest::Approx(1.0).epsilon(1e-11));

  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, 2;
  CHECK(perron_eigenvalue(m) == doctest::Approx(3.0).epsilon(1e-11));

  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 4);
  CHECK(perron_eigenvalue(ones) == doctest::Approx(4.0).epsilon(1e-11));
}

TEST_CASE("cgf on the hand-computable two-state chain") {
  // q = 2 makes P constant 1/2, so rho(M(theta)) = 1/(2-theta) + 1/(2+2theta)
  const auto model = testing::two_state_model(1, 1, 3, 1);
  const CgfEvaluator cgf(model, 2.0);

  CHECK(cgf.q_rate() == 2.0);
  CHECK(cgf.theta_min() == doctest::Approx(-1.0));
  CHECK(cgf.theta_max() == doctest::Approx(2.0));

  CHECK(cgf(0.0) == 0.0);
  for (double theta : {-0.6, -0.2, 0.2, 0.35, 0.7, 1.2}) {
    const double rho = 1.0 / (2.0 - theta) + 1.0 / (2.0 + 2.0 * theta);
    CHECK(cgf(theta) == doctest::Approx(std::log(rho)).epsilon(1e-11));
  }
  CHECK(std::abs(cgf(0.5)) < 1e-11);  // the decay rate: rho(M(1/2)) = 1

  const double inf = std::numeric_limits<double>::infinity();
  CHECK(cgf(2.0) == inf);
  CHECK(cgf(2.5) == inf);
  CHECK(cgf(-1.0) == inf);
  CHECK(cgf(-3.0) == inf);
  CHECK(cgf(cgf.theta_max() - 1e-8) > 5.0);  // blows up at the endpoint
}

TEST_CASE("decay rates on two-state closed forms") {
  // lambda = a/d - b/(g-d)
  CHECK(decay_rate_ld(testing::two_state_model(1, 1, 3, 1)) ==
        doctest::Approx(0.5).epsilon(1e-9));
  CHECK(decay_rate_eig(testing::two_state_model(1, 1, 3, 1)) ==
        doctest::Approx(0.5).epsilon(1e-11));

  CHECK(decay_rate_ld(testing::two_state_model(2, 1, 2, 1)) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(decay_rate_eig(testing::two_state_model(2, 1, 2, 1)) ==
        doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("negative or zero drift is rejected") {
  const auto negative = testing::two_state_model(1, 1, 1.5, 1);
  CHECK_THROWS_AS(decay_rate_ld(negative), Error);
  CHECK_THROWS_AS(decay_rate_eig(negative), Error);
  const auto zero = testing::two_state_model(1, 1, 2, 1);
  CHECK_THROWS_AS(decay_rate_ld(zero), Error);
}

TEST_CASE("spectrum negates under model reversal") {
  TestRng rng(31);
  const NetGenModel model = testing::random_reversible_model(rng, 5, true);
  const NetGenModel reversed = reverse_model(model);

  const auto spectrum = [](const NetGenModel& m) {
    Eigen::MatrixXd a = m.q_matrix().entries().transpose();
    for (int i = 0; i < m.size(); ++i) a.row(i) /= m.rates()(i);
    Eigen::VectorXd values = Eigen::EigenSolver<Eigen::MatrixXd>(a)
                                 .eigenvalues()
                                 .real();
    std::sort(values.data(), values.data() + values.size());
    return values;
  };

  const Eigen::VectorXd forward = spectrum(model);
  Eigen::VectorXd backward = -spectrum(reversed).reverse();
  CHECK((forward - backward).cwiseAbs().maxCoeff() < 1e-9);

  // the reversed system's least-magnitude negative eigenvalue is -lambda
  const double lambda = decay_rate_eig(model);
  double closest_negative = -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd rev = spectrum(reversed);
  for (int i = 0; i < rev.size(); ++i) {
    if (rev(i) < -1e-9) closest_negative = std::max(closest_negative, rev(i));
  }
  CHECK(closest_negative == doctest::Approx(-lambda).epsilon(1e-9));
}

TEST_CASE("rate scaling rescales the decay rate") {
  TestRng rng(32);
  const NetGenModel model = testing::random_reversible_model(rng, 4, true);
  const double lambda = decay_rate_eig(model);
  for (double c : {0.25, 3.0}) {
    const NetGenModel scaled(model.q_matrix(), c * model.rates());
    CHECK(decay_rate_eig(scaled) == doctest::Approx(lambda / c).epsilon(1e-9));
  }
}

TEST_CASE("cross-method agreement on random reversible models") {
  TestRng rng(33);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + trial % 9;
    const NetGenModel model = testing::random_reversible_model(rng, n, true);
    const double ld = decay_rate_ld(model);
    const double eig = decay_rate_eig(model);
    CHECK(std::abs(ld - eig) <= 1e-6 * eig);
  }
}

TEST_CASE("cgf convexity and negative initial slope") {
  TestRng rng(34);
  for (int trial = 0; trial < 5; ++trial) {
    const NetGenModel model = testing::random_reversible_model(rng, 4, true);
    const CgfEvaluator cgf(model);
    const double width = cgf.theta_max() - cgf.theta_min();

    for (int k = 0; k < 10; ++k) {
      const double t1 = cgf.theta_min() + width * rng.uniform(0.05, 0.95);
      const double t2 = cgf.theta_min() + width * rng.uniform(0.05, 0.95);
      const double mid = 0.5 * (t1 + t2);
      CHECK(cgf(mid) <= 0.5 * (cgf(t1) + cgf(t2)) + 1e-10);
    }

    const double h = 1e-6 * width;
    CHECK((cgf(h) - cgf(-h)) / (2.0 * h) < 0.0);
  }
}

TEST_CASE("decay rate is independent of the uniformization rate") {
  TestRng rng(35);
  const NetGenModel model = testing::random_reversible_model(rng, 6, true);
  const double max_exit = model.q_matrix().max_exit_rate();

  const auto root_at = [&](double q) {
    const CgfEvaluator cgf(model, q);
    double lo = 1e-12, hi = cgf.theta_max() * (1.0 - 1e-12);
    while (hi - lo > 1e-13) {
      const double mid = 0.5 * (lo + hi);
      (cgf(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  const double reference = root_at(1.1 * max_exit);
  for (double multiplier : {2.0, 10.0}) {
    CHECK(root_at(multiplier * max_exit) == doctest::Approx(reference).epsilon(1e-8));
  }
}

TEST_CASE("decay rate report carries both routes and samples") {
  const auto model = testing::two_state_model(1, 1, 3, 1);
  const DecayRateReport report = decay_rate_report(model, 21);
  CHECK(report.lambda_ld == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(report.lambda_eig == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(report.agreement_gap <= 1e-6 * report.lambda_eig);
  CHECK(report.cgf_samples.size() == 21);
  CHECK(report.theta_min < 0.0);
  CHECK(report.theta_max > 0.0);
  for (const auto& [theta, value] : report.cgf_samples) {
    CHECK(theta > report.theta_min);
    CHECK(theta < report.theta_max);
    CHECK(std::isfinite(value));
  }
}
