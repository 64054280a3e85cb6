#include "biag/num/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "biag/error.hpp"

namespace biag::num {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str());
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double Matrix::item() const {
  if (rows_ != 1 || cols_ != 1) throw ShapeError("item() on non-scalar " + shape_str());
  return data_[0];
}

std::string Matrix::shape_str() const {
  std::ostringstream os;
  os << "(" << rows_ << "x" << cols_ << ")";
  return os.str();
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_str() + " x " +
                     b.shape_str());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: feature widths differ, " + a.shape_str() + " x " +
                     b.shape_str() + "^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts differ, " + a.shape_str() + "^T x " +
                     b.shape_str());
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& x : out.data()) x *= s;
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bd[i];
  return out;
}

Matrix add_row(const Matrix& m, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols()) {
    throw ShapeError("add_row: bias " + bias.shape_str() + " does not broadcast over " +
                     m.shape_str());
  }
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias(0, j);
  }
  return out;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("concat_cols: row counts differ, " + a.shape_str() + " | " +
                     b.shape_str());
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto o = out.row(i);
    std::copy(a.row(i).begin(), a.row(i).end(), o.begin());
    std::copy(b.row(i).begin(), b.row(i).end(), o.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

Matrix concat_rows(const Matrix& a, const Matrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.cols() != b.cols()) {
    throw ShapeError("concat_rows: widths differ, " + a.shape_str() + " over " +
                     b.shape_str());
  }
  std::vector<double> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return Matrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows()) {
      throw ShapeError("select_rows: index " + std::to_string(indices[i]) + " out of range for " +
                       m.shape_str());
    }
    std::copy(m.row(indices[i]).begin(), m.row(indices[i]).end(), out.row(i).begin());
  }
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  if (m.empty()) throw ShapeError("softmax_rows: empty input");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (double& x : o) x /= sum;
  }
  return out;
}

Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, double scale) {
  if (q.cols() != k.cols()) {
    throw ShapeError("attention: query " + q.shape_str() + " and key " + k.shape_str() +
                     " widths differ");
  }
  if (k.rows() != v.rows()) {
    throw ShapeError("attention: key " + k.shape_str() + " and value " + v.shape_str() +
                     " row counts differ");
  }
  if (!(scale > 0.0)) throw ContractError("attention: scale must be positive");
  return matmul(softmax_rows(num::scale(matmul_nt(q, k), 1.0 / scale)), v);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> row_norms(const Matrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = std::sqrt(dot(m.row(i), m.row(i)));
  return out;
}

std::vector<double> row_cosine(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "row_cosine");
  const auto na = row_norms(a);
  const auto nb = row_norms(b);
  std::vector<double> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (na[i] == 0.0 || nb[i] == 0.0) {
      throw DegenerateInputError("row_cosine: row " + std::to_string(i) + " has zero norm");
    }
    out[i] = std::clamp(dot(a.row(i), b.row(i)) / (na[i] * nb[i]), -1.0, 1.0);
  }
  return out;
}

Matrix row_normalize(const Matrix& m) {
  Matrix out = m;
  const auto n = row_norms(m);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (n[i] == 0.0) {
      throw DegenerateInputError("row_normalize: row " + std::to_string(i) + " has zero norm");
    }
    for (double& x : out.row(i)) x /= n[i];
  }
  return out;
}

Matrix column_mean(const Matrix& m) {
  if (m.rows() == 0) throw DegenerateInputError("column_mean: no rows");
  Matrix out(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out(0, j) += r[j];
  }
  for (double& x : out.data()) x /= static_cast<double>(m.rows());
  return out;
}

double frobenius_norm(const Matrix& m) { return std::sqrt(dot(m.data(), m.data())); }

bool all_finite(const Matrix& m) noexcept {
  return std::all_of(m.data().begin(), m.data().end(), [](double x) { return std::isfinite(x); });
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace biag::num
