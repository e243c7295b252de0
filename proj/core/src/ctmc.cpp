#include "fluidq/ctmc.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "fluidq/error.hpp"

namespace fluidq {

namespace {

// Strong connectivity of the sparsity graph: every state reachable from
// state 0 along forward edges and along reversed edges.
bool reaches_all(const Eigen::MatrixXd& q, bool transpose) {
  const int n = static_cast<int>(q.rows());
  std::vector<char> seen(n, 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      if (v == u || seen[v]) continue;
      const double edge = transpose ? q(v, u) : q(u, v);
      if (edge > 0.0) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

}  // namespace

RateMatrix::RateMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  const auto n = entries_.rows();
  if (n == 0 || entries_.cols() != n) {
    throw Error(ErrorCategory::model, "rate matrix must be square and non-empty");
  }
  if (!entries_.allFinite()) {
    throw Error(ErrorCategory::model, "rate matrix has non-finite entries");
  }
  const double scale = entries_.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && entries_(i, j) < 0.0) {
        throw Error(ErrorCategory::model,
                    "rate matrix has a negative off-diagonal entry at (" +
                        std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
    const double row_sum = entries_.row(i).sum();
    if (std::abs(row_sum) > 1e-12 * std::max(scale, 1.0)) {
      throw Error(ErrorCategory::model,
                  "rate matrix row " + std::to_string(i) +
                      " does not sum to zero (sum = " + std::to_string(row_sum) + ")");
    }
  }
  if (n > 1 && (!reaches_all(entries_, false) || !reaches_all(entries_, true))) {
    throw Error(ErrorCategory::model,
                "rate matrix is not irreducible (transition graph is not strongly connected)");
  }
  if (n == 1 && entries_(0, 0) != 0.0) {
    throw Error(ErrorCategory::model, "1-state rate matrix must be zero");
  }
}

double RateMatrix::max_exit_rate() const {
  return (-entries_.diagonal()).maxCoeff();
}

NetGenModel::NetGenModel(RateMatrix q_matrix, Eigen::VectorXd rates,
                         std::vector<std::string> labels)
    : q_(std::move(q_matrix)), rates_(std::move(rates)), labels_(std::move(labels)) {
  if (rates_.size() != q_.size()) {
    throw Error(ErrorCategory::model, "rates vector length does not match state count");
  }
  if (!labels_.empty() && static_cast<int>(labels_.size()) != q_.size()) {
    throw Error(ErrorCategory::model, "labels length does not match state count");
  }
  if (!rates_.allFinite()) {
    throw Error(ErrorCategory::model, "rates must be finite");
  }
  for (int i = 0; i < rates_.size(); ++i) {
    if (rates_(i) == 0.0) {
      throw Error(ErrorCategory::model,
                  "state " + std::to_string(i) + " has zero net generation rate");
    }
    (rates_(i) > 0.0 ? surplus_ : deficit_).push_back(i);
  }
  if (surplus_.empty() || deficit_.empty()) {
    throw Error(ErrorCategory::model,
                surplus_.empty()
                    ? "all net generation rates are negative (battery never charges)"
                    : "all net generation rates are positive (battery never drains)");
  }
}

Eigen::VectorXd invariant_distribution(const RateMatrix& q_matrix) {
  const int n = q_matrix.size();
  const Eigen::MatrixXd& q = q_matrix.entries();

  // Augmented least-squares system [Q^T; 1^T] pi = [0; 1].
  Eigen::MatrixXd a(n + 1, n);
  a.topRows(n) = q.transpose();
  a.row(n).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs(n) = 1.0;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < n) {
    throw Error(ErrorCategory::numeric,
                "invariant distribution is not unique: chain not irreducible");
  }
  Eigen::VectorXd pi = qr.solve(rhs);
  pi /= pi.sum();

  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if ((pi.transpose() * q).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorCategory::numeric, "invariant distribution residual too large");
  }
  if ((pi.array() <= 0.0).any()) {
    throw Error(ErrorCategory::numeric,
                "invariant distribution has non-positive mass: chain not irreducible");
  }
  return pi;
}

double drift(const NetGenModel& model) {
  const Eigen::VectorXd pi = invariant_distribution(model.q_matrix());
  return pi.dot(model.rates());
}

UniformizedChain uniformize(const RateMatrix& q_matrix, std::optional<double> q_rate) {
  const double max_exit = q_matrix.max_exit_rate();
  const double q = q_rate.value_or(1.1 * max_exit);
  if (!(q > max_exit)) {
    throw Error(ErrorCategory::model,
                "uniformization rate too small: need q > " + std::to_string(max_exit));
  }
  const int n = q_matrix.size();
  UniformizedChain chain;
  chain.q_rate = q;
  chain.p_matrix = Eigen::MatrixXd::Identity(n, n) + q_matrix.entries() / q;
  return chain;
}

NetGenModel reverse_model(const NetGenModel& model) {
  return NetGenModel(model.q_matrix(), -model.rates(), model.labels());
}

}  // namespace fluidq
