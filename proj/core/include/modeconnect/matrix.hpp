#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mc {

/// Dense row-major matrix of 64-bit floats. Values are immutable by
/// convention once an operation has produced them; all operations return
/// fresh matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-filled
  Matrix(int rows, int cols, std::vector<double> data);

  static Matrix identity(int n);
  static Matrix filled(int rows, int cols, double value);
  /// Row-major construction from nested initializer data, one inner
  /// vector per row. Rows must have equal length.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> row(int r) { return {data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(int r) const { return {data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }

  bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
  std::string shape_str() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix transpose(const Matrix& a);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);

/// a + b with b broadcast across rows (b is 1 x cols).
Matrix add_row_broadcast(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);

/// Appends a row of ones; used to realize biases as a constant input
/// feature.
Matrix append_ones_row(const Matrix& a);

Matrix slice_cols(const Matrix& a, int begin, int end);
Matrix slice_rows(const Matrix& a, int begin, int end);
Matrix concat_cols(const Matrix& a, const Matrix& b);
Matrix concat_rows(const Matrix& a, const Matrix& b);

}  // namespace mc
