#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace biag::num {

/// Dense row-major matrix of doubles. Value type: copies are deep.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  static Matrix scalar(double v) { return Matrix(1, 1, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Value of a 1x1 matrix.
  double item() const;

  std::string shape_str() const;
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  /// Exact (bitwise for finite values) comparison.
  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a · bᵀ without materialising the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// aᵀ · b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);
/// Adds the 1×cols row vector `bias` to every row of `m`.
Matrix add_row(const Matrix& m, const Matrix& bias);

/// Feature-axis concatenation: [a | b].
Matrix concat_cols(const Matrix& a, const Matrix& b);
/// Sample-axis concatenation: a stacked over b.
Matrix concat_rows(const Matrix& a, const Matrix& b);
Matrix select_rows(const Matrix& m, std::span<const std::size_t> indices);

/// Numerically stable row-wise softmax (per-row max subtraction).
Matrix softmax_rows(const Matrix& m);

/// softmax_rows(q·kᵀ / scale) · v.
Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, double scale);

/// Cosine similarity of corresponding rows. Throws DegenerateInputError on a
/// zero row, naming its index.
std::vector<double> row_cosine(const Matrix& a, const Matrix& b);

std::vector<double> row_norms(const Matrix& m);
/// Divides every row by its Euclidean norm. Zero rows are rejected.
Matrix row_normalize(const Matrix& m);
/// Mean over rows, as a 1×cols matrix.
Matrix column_mean(const Matrix& m);
double frobenius_norm(const Matrix& m);
double dot(std::span<const double> a, std::span<const double> b);

bool all_finite(const Matrix& m) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace biag::num
