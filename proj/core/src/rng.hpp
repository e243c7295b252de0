#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace fluidq::detail {

// Deterministic cross-platform sampling: raw mt19937_64 output mapped to
// 53-bit uniforms, exponentials by inverse CDF, categoricals by CDF scan.
// Standard-library distributions are not used because their output is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }  // [0, 1)

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Index i with probability weights(i) / weights.sum(); weights >= 0.
  int categorical(const Eigen::VectorXd& weights) {
    const double u = uniform() * weights.sum();
    double cumulative = 0.0;
    const int n = static_cast<int>(weights.size());
    for (int i = 0; i < n; ++i) {
      cumulative += weights(i);
      if (u < cumulative) return i;
    }
    return n - 1;
  }

  int uniform_int(int n) {
    const int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fluidq::detail
