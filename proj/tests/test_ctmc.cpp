#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "fluidq/ctmc.hpp"
#include "fluidq/error.hpp"
#include "support/oracles.hpp"

using namespace fluidq;
using testing::TestRng;

namespace {

RateMatrix make_q(std::initializer_list<double> entries, int n) {
  Eigen::MatrixXd q(n, n);
  int k = 0;
  for (double e : entries) {
    q(k / n, k % n) = e;
    ++k;
  }
  return RateMatrix(q);
}

}  // namespace

TEST_CASE("rate matrix validation") {
  CHECK_NOTHROW(make_q({-1, 1, 1, -1}, 2));

  Eigen::MatrixXd negative(2, 2);
  negative << -1, 1, -0.5, 0.5;
  // row sums are fine but the off-diagonal is negative
  negative(1, 0) = -0.5;
  negative(1, 1) = 0.5;
  CHECK_THROWS_AS(RateMatrix(negative), Error);

  Eigen::MatrixXd bad_sum(2, 2);
  bad_sum << -1, 1.5, 1, -1;
  CHECK_THROWS_AS(RateMatrix(bad_sum), Error);

  Eigen::MatrixXd reducible = Eigen::MatrixXd::Zero(4, 4);
  reducible.topLeftCorner(2, 2) << -1, 1, 1, -1;
  reducible.bottomRightCorner(2, 2) << -2, 2, 2, -2;
  CHECK_THROWS_WITH_AS(RateMatrix(reducible),
                       doctest::Contains("not irreducible"), Error);

  Eigen::MatrixXd one_way = Eigen::MatrixXd::Zero(2, 2);
  one_way << -1, 1, 0, 0;  // absorbing state
  CHECK_THROWS_AS(RateMatrix(one_way), Error);
}

TEST_CASE("net gen model validation") {
  const RateMatrix q = make_q({-1, 1, 1, -1}, 2);
  Eigen::VectorXd rates(2);
  rates << -1, 2;
  CHECK_NOTHROW(NetGenModel(q, rates));

  rates << 0, 2;
  CHECK_THROWS_WITH_AS(NetGenModel(q, rates),
                       doctest::Contains("zero net generation"), Error);

  rates << 1, 2;
  CHECK_THROWS_AS(NetGenModel(q, rates), Error);  // S- empty
  rates << -1, -2;
  CHECK_THROWS_AS(NetGenModel(q, rates), Error);  // S+ empty

  rates = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(NetGenModel(q, rates), Error);  // length mismatch
}

TEST_CASE("invariant distribution on closed forms") {
  const Eigen::VectorXd pi_sym = invariant_distribution(make_q({-1, 1, 1, -1}, 2));
  CHECK(pi_sym(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pi_sym(1) == doctest::Approx(0.5).epsilon(1e-12));

  // detailed balance: pi_0 * 1 = pi_1 * 2
  const Eigen::VectorXd pi = invariant_distribution(make_q({-1, 1, 2, -2}, 2));
  CHECK(pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("invariant distribution matches power iteration on random chains") {
  TestRng rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    const NetGenModel model = testing::random_reversible_model(rng, 4, true);
    const Eigen::VectorXd pi = invariant_distribution(model.q_matrix());

    const UniformizedChain chain = uniformize(model.q_matrix());
    const Eigen::VectorXd oracle = testing::power_iteration_pi(chain.p_matrix);
    CHECK((pi - oracle).cwiseAbs().maxCoeff() < 1e-10);

    CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(pi.minCoeff() > 0.0);
    CHECK((pi.transpose() * model.q_matrix().entries()).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("drift closed forms") {
  CHECK(drift(testing::two_state_model(1, 1, 3, 1)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(drift(testing::two_state_model(1, 1, 2, 1)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(drift(testing::two_state_model(1, 1, 1.5, 1)) ==
        doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("drift is linear under constant rate shifts") {
  TestRng rng(12);
  const NetGenModel model = testing::random_reversible_model(rng, 5, true);
  const double base = drift(model);
  for (double shift : {-0.75, 0.5, 2.0}) {
    Eigen::VectorXd rates = model.rates().array() + shift;
    if ((rates.array() == 0.0).any() || (rates.array() > 0).all() ||
        (rates.array() < 0).all()) {
      continue;
    }
    const NetGenModel shifted(model.q_matrix(), rates);
    CHECK(drift(shifted) == doctest::Approx(base + shift).epsilon(1e-11));
  }
}

TEST_CASE("uniformization closed forms") {
  const UniformizedChain chain = uniformize(make_q({-1, 1, 2, -2}, 2), 4.0);
  Eigen::MatrixXd expected(2, 2);
  expected << 0.75, 0.25, 0.5, 0.5;
  CHECK((chain.p_matrix - expected).cwiseAbs().maxCoeff() < 1e-15);

  const UniformizedChain sym = uniformize(make_q({-1, 1, 1, -1}, 2), 2.0);
  CHECK(sym.p_matrix(0, 0) == doctest::Approx(0.5));
  CHECK(sym.p_matrix(1, 0) == doctest::Approx(0.5));

  CHECK_THROWS_WITH_AS(uniformize(make_q({-1, 1, 2, -2}, 2), 2.0),
                       doctest::Contains("uniformization rate too small"), Error);
  CHECK_THROWS_AS(uniformize(make_q({-1, 1, 2, -2}, 2), -1.0), Error);
}

TEST_CASE("uniformized chain keeps the invariant distribution") {
  TestRng rng(13);
  for (int trial = 0; trial < 6; ++trial) {
    const NetGenModel model = testing::random_reversible_model(rng, 6, false);
    const Eigen::VectorXd pi = invariant_distribution(model.q_matrix());
    const UniformizedChain chain = uniformize(model.q_matrix());
    CHECK(chain.q_rate == doctest::Approx(1.1 * model.q_matrix().max_exit_rate()));
    CHECK((pi.transpose() * chain.p_matrix - pi.transpose()).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((chain.p_matrix.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reverse model negates rates and drift") {
  const NetGenModel model = testing::two_state_model(1, 1, 3, 1);
  const NetGenModel reversed = reverse_model(model);
  CHECK(reversed.rates()(0) == 1.0);
  CHECK(reversed.rates()(1) == -2.0);

  TestRng rng(14);
  const NetGenModel random = testing::random_reversible_model(rng, 5, true);
  CHECK(drift(reverse_model(random)) == doctest::Approx(-drift(random)).epsilon(1e-12));

  const NetGenModel twice = reverse_model(reverse_model(random));
  CHECK(twice.rates() == random.rates());
  CHECK(twice.q_matrix().entries() == random.q_matrix().entries());
}
