#pragma once

#include <cstddef>
#include <optional>

#include "biag/banks.hpp"
#include "biag/num/matrix.hpp"
#include "biag/num/rng.hpp"

namespace biag::nc {

/// k equal-norm vectors with identical pairwise inner product −c²/(k−1).
struct EtfFrame {
  std::size_t k = 0;
  std::size_t dim = 0;
  double scale = 1.0;
  num::Matrix vectors;  // k × dim
};

/// Builds a simplex ETF in `dim` dimensions with a seeded random orientation.
/// Requires k ≥ 2, dim ≥ k − 1 and c > 0.
EtfFrame simplex_etf(std::size_t k, std::size_t dim, double c, num::Rng& rng);

/// c²·(k/(k−1)·I − 1/(k−1)·J): the Gram matrix every ETF must have.
num::Matrix etf_gram(std::size_t k, double c);

/// Neural-collapse diagnostics.
struct NcReport {
  double nc1 = 0.0;            ///< tr(within-class scatter) / tr(between-class scatter)
  double nc2_norm_dev = 0.0;   ///< max relative deviation of centered-mean norms
  double nc2_angle_dev = 0.0;  ///< max |cos(μ̃_k, μ̃_j) + 1/(K−1)|
  double nc3_align = 0.0;      ///< mean cos(w_k, μ̃_k)
  double nc4_agreement = 0.0;  ///< nearest-weight vs nearest-mean agreement rate
};

/// Computes NC1–NC4 over the train features of every class in `weights`.
NcReport nc_metrics(const FeatureBank& features, const WeightBank& weights);

/// w = A·p + b, row-wise.
struct AffineMap {
  num::Matrix linear;  ///< A, dim × dim
  num::Matrix offset;  ///< b, 1 × dim
  /// Fit residual ‖P·Aᵀ + b − W‖_F on the fitting data; 0 for analytic maps.
  double residual = 0.0;

  // Metadata when built analytically as A = s·R, b = −s·R·μ_G.
  std::optional<double> similarity_scale;
  std::optional<num::Matrix> rotation;
  std::optional<num::Matrix> global_mean;

  static AffineMap from_similarity(double s, const num::Matrix& rotation,
                                   const num::Matrix& global_mean);
  std::size_t dim() const noexcept { return linear.rows(); }
};

/// Least-squares fit of weights ≈ prototypes·Aᵀ + b through the normal
/// equations with a 1e-10 ridge, which selects the minimum-norm solution in
/// the rank-deficient case.
AffineMap affine_oracle_fit(const num::Matrix& prototypes, const num::Matrix& weights);

num::Matrix affine_oracle_apply(const AffineMap& map, const num::Matrix& prototypes);

}  // namespace biag::nc
