#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace fluidq {

// Transition rate matrix of an irreducible continuous-time Markov chain.
// Construction validates: off-diagonal entries >= 0, each row sums to zero
// (within 1e-12 relative to the largest entry magnitude), and the directed
// graph of nonzero off-diagonal entries is strongly connected.
class RateMatrix {
 public:
  explicit RateMatrix(Eigen::MatrixXd entries);

  int size() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

  // max_i(-Q_ii), the fastest exit rate.
  double max_exit_rate() const;

 private:
  Eigen::MatrixXd entries_;
};

// Background chain paired with per-state net generation rates: the rate at
// which the battery charges (rate > 0) or discharges (rate < 0) while the
// chain sits in each state. Rates are nonzero and of mixed sign.
class NetGenModel {
 public:
  NetGenModel(RateMatrix q_matrix, Eigen::VectorXd rates,
              std::vector<std::string> labels = {});

  int size() const { return q_.size(); }
  const RateMatrix& q_matrix() const { return q_; }
  const Eigen::VectorXd& rates() const { return rates_; }
  const std::vector<std::string>& labels() const { return labels_; }

  // S+ / S-: indices of charging (surplus) and discharging (deficit) states.
  const std::vector<int>& surplus_states() const { return surplus_; }
  const std::vector<int>& deficit_states() const { return deficit_; }

  double max_rate() const { return rates_.maxCoeff(); }
  double min_rate() const { return rates_.minCoeff(); }

  // R = diag(rates)
  Eigen::MatrixXd rate_diagonal() const {
    return rates_.asDiagonal().toDenseMatrix();
  }

 private:
  RateMatrix q_;
  Eigen::VectorXd rates_;
  std::vector<std::string> labels_;
  std::vector<int> surplus_;
  std::vector<int> deficit_;
};

// DTMC subordinated to a Poisson clock of rate q_rate: p = I + Q / q_rate.
// q_rate strictly exceeds every exit rate, so p is row-stochastic with a
// positive diagonal and shares the invariant distribution of Q.
struct UniformizedChain {
  double q_rate = 0.0;
  Eigen::MatrixXd p_matrix;
};

// Invariant distribution pi of Q: pi Q = 0, sum(pi) = 1, pi > 0.
// Solved from the augmented system [Q^T; 1^T] pi = [0; 1] by QR.
Eigen::VectorXd invariant_distribution(const RateMatrix& q_matrix);

// Steady-state mean net generation, sum_i pi_i r_i (power units).
double drift(const NetGenModel& model);

// Default q_rate is 1.1 * max exit rate.
UniformizedChain uniformize(const RateMatrix& q_matrix,
                            std::optional<double> q_rate = std::nullopt);

// Generation and demand roles interchanged: same Q, rates negated.
NetGenModel reverse_model(const NetGenModel& model);

}  // namespace fluidq
