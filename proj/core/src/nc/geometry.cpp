#include "biag/nc/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "biag/error.hpp"

namespace biag::nc {

using num::Matrix;

namespace {

constexpr double kRidge = 1e-10;

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return e;
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j)
      m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = e(i, j);
  return m;
}

}  // namespace

EtfFrame simplex_etf(std::size_t k, std::size_t dim, double c, num::Rng& rng) {
  if (k < 2) throw ConfigError("simplex_etf: need at least 2 classes", "k");
  if (!(c > 0.0)) throw ConfigError("simplex_etf: scale must be positive", "etf_scale");
  if (dim + 1 < k) {
    throw ConfigError("simplex_etf: infeasible geometry, " + std::to_string(k) +
                          " classes need dim >= " + std::to_string(k - 1) + ", got " +
                          std::to_string(dim),
                      "dim");
  }
  // Rows of sqrt(k/(k-1))·(I − J/k) form a unit ETF inside the hyperplane
  // orthogonal to the ones vector. Expressed in the Helmert basis of that
  // hyperplane this is just sqrt(k/(k-1)) times the basis coordinates.
  Matrix frame(k, dim);
  const double lift = std::sqrt(static_cast<double>(k) / static_cast<double>(k - 1));
  for (std::size_t j = 1; j < k; ++j) {
    const double norm = std::sqrt(static_cast<double>(j * (j + 1)));
    for (std::size_t i = 0; i < j; ++i) frame(i, j - 1) = lift / norm;
    frame(j, j - 1) = -lift * static_cast<double>(j) / norm;
  }
  const Matrix rotation = num::random_orthogonal(dim, rng);
  EtfFrame out;
  out.k = k;
  out.dim = dim;
  out.scale = c;
  out.vectors = num::scale(num::matmul_nt(frame, rotation), c);
  return out;
}

Matrix etf_gram(std::size_t k, double c) {
  Matrix g(k, k);
  const double km1 = static_cast<double>(k - 1);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) g(i, j) = c * c * (i == j ? 1.0 : -1.0 / km1);
  return g;
}

NcReport nc_metrics(const FeatureBank& features, const WeightBank& weights) {
  const std::size_t k = weights.size();
  if (k == 0) throw DegenerateInputError("nc_metrics: no classes");
  const std::size_t dim = weights.dim();

  Matrix means(k, dim);
  std::vector<const Matrix*> samples(k);
  for (std::size_t c = 0; c < k; ++c) {
    const ClassId id = weights.ids()[c];
    auto idx = features.index_of(id);
    if (!idx || features.classes[*idx].train.rows() == 0) {
      throw DegenerateInputError("nc_metrics: class " + std::to_string(id) + " has no samples");
    }
    samples[c] = &features.classes[*idx].train;
    if (samples[c]->cols() != dim) throw ShapeError("nc_metrics: feature/weight width mismatch");
    const Matrix mu = num::column_mean(*samples[c]);
    std::copy(mu.row(0).begin(), mu.row(0).end(), means.row(c).begin());
  }
  const Matrix global = num::column_mean(means);
  Matrix centered = means;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < dim; ++j) centered(c, j) -= global(0, j);

  NcReport r;

  double within = 0.0;
  std::size_t n_total = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < samples[c]->rows(); ++i) {
      auto x = samples[c]->row(i);
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = x[j] - means(c, j);
        within += d * d;
      }
    }
    n_total += samples[c]->rows();
  }
  within /= static_cast<double>(n_total);
  double between = 0.0;
  for (double x : centered.data()) between += x * x;
  between /= static_cast<double>(k);
  if (between == 0.0) {
    throw DegenerateInputError("nc_metrics: all class means coincide");
  }
  r.nc1 = within / between;

  const auto norms = num::row_norms(centered);
  double mean_norm = 0.0;
  for (double n : norms) mean_norm += n;
  mean_norm /= static_cast<double>(k);
  for (double n : norms) r.nc2_norm_dev = std::max(r.nc2_norm_dev, std::abs(n - mean_norm) / mean_norm);

  if (k > 1) {
    const double target = -1.0 / static_cast<double>(k - 1);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        if (norms[a] == 0.0 || norms[b] == 0.0) {
          r.nc2_angle_dev = std::max(r.nc2_angle_dev, std::abs(target));
          continue;
        }
        const double cosab = num::dot(centered.row(a), centered.row(b)) / (norms[a] * norms[b]);
        r.nc2_angle_dev = std::max(r.nc2_angle_dev, std::abs(cosab - target));
      }
    }
  }

  const auto wnorms = num::row_norms(weights.rows());
  double align = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (wnorms[c] > 0.0 && norms[c] > 0.0)
      align += num::dot(weights.rows().row(c), centered.row(c)) / (wnorms[c] * norms[c]);
  }
  r.nc3_align = align / static_cast<double>(k);

  std::size_t agree = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < samples[c]->rows(); ++i) {
      auto x = samples[c]->row(i);
      std::size_t by_weight = 0;
      std::size_t by_mean = 0;
      double best_dot = -std::numeric_limits<double>::infinity();
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double s = num::dot(weights.rows().row(j), x);
        if (s > best_dot) {
          best_dot = s;
          by_weight = j;
        }
        double d = 0.0;
        for (std::size_t q = 0; q < dim; ++q) {
          const double e = x[q] - means(j, q);
          d += e * e;
        }
        if (d < best_dist) {
          best_dist = d;
          by_mean = j;
        }
      }
      if (by_weight == by_mean) ++agree;
    }
  }
  r.nc4_agreement = static_cast<double>(agree) / static_cast<double>(n_total);
  return r;
}

AffineMap AffineMap::from_similarity(double s, const Matrix& rotation, const Matrix& global_mean) {
  if (rotation.rows() != rotation.cols() || global_mean.rows() != 1 ||
      global_mean.cols() != rotation.rows()) {
    throw ShapeError("AffineMap::from_similarity: rotation " + rotation.shape_str() +
                     " and mean " + global_mean.shape_str() + " are inconsistent");
  }
  AffineMap m;
  m.linear = num::scale(rotation, s);
  // b = −s·R·μ_G, computed as a row: −s·μ_G·Rᵀ.
  m.offset = num::scale(num::matmul_nt(global_mean, rotation), -s);
  m.similarity_scale = s;
  m.rotation = rotation;
  m.global_mean = global_mean;
  return m;
}

AffineMap affine_oracle_fit(const Matrix& prototypes, const Matrix& weights) {
  if (prototypes.rows() != weights.rows() || prototypes.rows() == 0) {
    throw ShapeError("affine_oracle_fit: prototypes " + prototypes.shape_str() + " and weights " +
                     weights.shape_str() + " must have equal, nonzero row counts");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(prototypes.rows());
  const Eigen::Index din = static_cast<Eigen::Index>(prototypes.cols());
  Eigen::MatrixXd x(n, din + 1);
  x.leftCols(din) = to_eigen(prototypes);
  x.col(din).setOnes();
  const Eigen::MatrixXd y = to_eigen(weights);

  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += kRidge;
  const Eigen::MatrixXd theta = gram.ldlt().solve(x.transpose() * y);  // (din+1) × dout

  AffineMap m;
  m.linear = from_eigen(theta.topRows(din).transpose());
  m.offset = from_eigen(theta.bottomRows(1));
  m.residual = (x * theta - y).norm();
  return m;
}

Matrix affine_oracle_apply(const AffineMap& map, const Matrix& prototypes) {
  if (prototypes.cols() != map.linear.cols()) {
    throw ShapeError("affine_oracle_apply: prototypes " + prototypes.shape_str() +
                     " do not match map input width " + std::to_string(map.linear.cols()));
  }
  return num::add_row(num::matmul_nt(prototypes, map.linear), map.offset);
}

}  // namespace biag::nc
