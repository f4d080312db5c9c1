#include "modeconnect/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "modeconnect/errors.hpp"
#include "modeconnect/parallel.hpp"

namespace mc {

Matrix::Matrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {
  if (rows < 0 || cols < 0) throw InvalidArgument("matrix dimensions must be non-negative");
}

Matrix::Matrix(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != static_cast<std::size_t>(rows) * cols)
    throw InvalidArgument("matrix data length " + std::to_string(data_.size()) + " does not match shape " +
                          std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::filled(int rows, int cols, double value) {
  Matrix m(rows, cols);
  std::fill(m.data_.begin(), m.data_.end(), value);
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int i = 0; i < m.rows(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(m.cols())) throw InvalidArgument("ragged rows in from_rows");
    std::copy(rows[i].begin(), rows[i].end(), m.data() + static_cast<std::size_t>(i) * m.cols());
  }
  return m;
}

std::string Matrix::shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw InvalidArgument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

// C[i0:i1) rows of A(m x k) * B(k x n), row-major ikj kernel.
void matmul_rows(const double* a, const double* b, double* c, int i0, int i1, int k, int n) {
  for (int i = i0; i < i1; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    std::memset(ci, 0, sizeof(double) * n);
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw InvalidArgument("matmul: inner dimensions differ, " + a.shape_str() + " * " + b.shape_str());
  Matrix c(a.rows(), b.cols());
  const int m = a.rows(), k = a.cols(), n = b.cols();
  parallel_for_rows(m, static_cast<std::size_t>(k) * n,
                    [&](int i0, int i1) { matmul_rows(a.data(), b.data(), c.data(), i0, i1, k, n); });
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw InvalidArgument("matmul_nt: inner dimensions differ, " + a.shape_str() + " * " + b.shape_str() + "^T");
  Matrix c(a.rows(), b.rows());
  const int m = a.rows(), k = a.cols(), n = b.rows();
  parallel_for_rows(m, static_cast<std::size_t>(k) * n, [&](int i0, int i1) {
    for (int i = i0; i < i1; ++i) {
      const double* ai = a.data() + static_cast<std::size_t>(i) * k;
      double* ci = c.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double* bj = b.data() + static_cast<std::size_t>(j) * k;
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
        ci[j] = acc;
      }
    }
  });
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw InvalidArgument("matmul_tn: inner dimensions differ, " + a.shape_str() + "^T * " + b.shape_str());
  Matrix c(a.cols(), b.cols());
  const int m = a.cols(), k = a.rows(), n = b.cols();
  // Accumulate over k in fixed order; each output row is owned by one task.
  parallel_for_rows(m, static_cast<std::size_t>(k) * n, [&](int i0, int i1) {
    for (int p = 0; p < k; ++p) {
      const double* ap = a.data() + static_cast<std::size_t>(p) * m;
      const double* bp = b.data() + static_cast<std::size_t>(p) * n;
      for (int i = i0; i < i1; ++i) {
        const double av = ap[i];
        if (av == 0.0) continue;
        double* ci = c.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  });
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = s * a.data()[i];
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * b.data()[i];
  return c;
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& b) {
  if (b.rows() != 1 || b.cols() != a.cols())
    throw InvalidArgument("add_row_broadcast: need 1x" + std::to_string(a.cols()) + ", got " + b.shape_str());
  Matrix c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(0, j);
  return c;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i]));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

bool all_finite(const Matrix& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a.data()[i])) return false;
  return true;
}

Matrix append_ones_row(const Matrix& a) {
  Matrix c(a.rows() + 1, a.cols());
  std::copy(a.data(), a.data() + a.size(), c.data());
  double* last = c.data() + static_cast<std::size_t>(a.rows()) * a.cols();
  std::fill(last, last + a.cols(), 1.0);
  return c;
}

Matrix slice_cols(const Matrix& a, int begin, int end) {
  if (begin < 0 || end > a.cols() || begin > end) throw InvalidArgument("slice_cols: bad range");
  Matrix c(a.rows(), end - begin);
  for (int i = 0; i < a.rows(); ++i)
    std::copy(a.data() + static_cast<std::size_t>(i) * a.cols() + begin,
              a.data() + static_cast<std::size_t>(i) * a.cols() + end,
              c.data() + static_cast<std::size_t>(i) * c.cols());
  return c;
}

Matrix slice_rows(const Matrix& a, int begin, int end) {
  if (begin < 0 || end > a.rows() || begin > end) throw InvalidArgument("slice_rows: bad range");
  Matrix c(end - begin, a.cols());
  std::copy(a.data() + static_cast<std::size_t>(begin) * a.cols(), a.data() + static_cast<std::size_t>(end) * a.cols(),
            c.data());
  return c;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw InvalidArgument("concat_cols: row counts differ");
  Matrix c(a.rows(), a.cols() + b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    std::copy(a.row(i).begin(), a.row(i).end(), c.data() + static_cast<std::size_t>(i) * c.cols());
    std::copy(b.row(i).begin(), b.row(i).end(), c.data() + static_cast<std::size_t>(i) * c.cols() + a.cols());
  }
  return c;
}

Matrix concat_rows(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("concat_rows: column counts differ");
  Matrix c(a.rows() + b.rows(), a.cols());
  std::copy(a.data(), a.data() + a.size(), c.data());
  std::copy(b.data(), b.data() + b.size(), c.data() + a.size());
  return c;
}

}  // namespace mc
