#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "biag/num/matrix.hpp"

namespace biag::num {

/// Seeded generator shared by every stochastic component. One engine per
/// run; never global.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::mt19937_64& engine() noexcept { return engine_; }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  /// Derives an independent child seed.
  std::uint64_t split() { return engine_(); }

  Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0);
  Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Haar-distributed random orthogonal n×n matrix (QR of a Gaussian matrix
/// with the sign of R's diagonal folded into Q).
Matrix random_orthogonal(std::size_t n, Rng& rng);

}  // namespace biag::num
