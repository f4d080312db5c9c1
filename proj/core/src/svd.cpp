#include "modeconnect/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modeconnect/errors.hpp"

namespace mc {

namespace {

constexpr double kPairTol = 1e-14;
constexpr int kMaxSweeps = 60;

// Householder QR of a tall matrix (rows >= cols). Reflector tails are
// stored below the diagonal with the implicit-leading-one convention;
// R occupies the upper triangle.
struct HouseholderQr {
  Matrix qr;
  std::vector<double> tau;

  explicit HouseholderQr(Matrix a) : qr(std::move(a)), tau(qr.cols(), 0.0) {
    const int m = qr.rows(), n = qr.cols();
    for (int k = 0; k < n; ++k) {
      double sigma = 0.0;
      for (int i = k; i < m; ++i) sigma += qr(i, k) * qr(i, k);
      sigma = std::sqrt(sigma);
      if (sigma == 0.0) continue;
      const double alpha = qr(k, k);
      const double beta = alpha >= 0.0 ? -sigma : sigma;
      tau[k] = (beta - alpha) / beta;
      const double scale = 1.0 / (alpha - beta);
      for (int i = k + 1; i < m; ++i) qr(i, k) *= scale;
      qr(k, k) = beta;
      for (int j = k + 1; j < n; ++j) {
        double w = qr(k, j);
        for (int i = k + 1; i < m; ++i) w += qr(i, k) * qr(i, j);
        w *= tau[k];
        qr(k, j) -= w;
        for (int i = k + 1; i < m; ++i) qr(i, j) -= w * qr(i, k);
      }
    }
  }

  Matrix r() const {
    const int n = qr.cols();
    Matrix out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) out(i, j) = qr(i, j);
    return out;
  }

  // Q * [x; 0] for x with qr.cols() rows.
  Matrix q_times(const Matrix& x) const {
    const int m = qr.rows(), n = qr.cols(), c = x.cols();
    Matrix out(m, c);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) out(i, j) = x(i, j);
    for (int k = n - 1; k >= 0; --k) {
      if (tau[k] == 0.0) continue;
      for (int j = 0; j < c; ++j) {
        double w = out(k, j);
        for (int i = k + 1; i < m; ++i) w += qr(i, k) * out(i, j);
        w *= tau[k];
        out(k, j) -= w;
        for (int i = k + 1; i < m; ++i) out(i, j) -= w * qr(i, k);
      }
    }
    return out;
  }
};

// Orthogonalizes the columns of w by plane rotations, accumulating them
// into v. On return the column q is orthogonal to column p up to
// kPairTol relative to the column norms.
void jacobi_orthogonalize(Matrix& w, Matrix& v) {
  const int m = w.rows(), n = w.cols();
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          alpha += wp * wp;
          beta += wq * wq;
          gamma += wp * wq;
        }
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::fabs(gamma) <= kPairTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (int i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
  if (sweep == kMaxSweeps)
    throw NumericalError("svd: Jacobi sweeps did not converge after " + std::to_string(kMaxSweeps) + " iterations");
}

// Fills zero-norm columns of u with vectors orthonormal to the rest.
void complete_basis(Matrix& u, const std::vector<int>& zero_cols) {
  const int m = u.rows(), n = u.cols();
  for (int j : zero_cols) {
    for (int cand = 0; cand < m; ++cand) {
      std::vector<double> vec(m, 0.0);
      vec[cand] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (int c = 0; c < n; ++c) {
          if (c == j) continue;
          double dot = 0.0;
          for (int i = 0; i < m; ++i) dot += u(i, c) * vec[i];
          for (int i = 0; i < m; ++i) vec[i] -= dot * u(i, c);
        }
      }
      double norm = 0.0;
      for (double x : vec) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 0.5) {
        for (int i = 0; i < m; ++i) u(i, j) = vec[i] / norm;
        break;
      }
    }
  }
}

SvdResult svd_tall(const Matrix& a) {
  const int m = a.rows(), n = a.cols();
  Matrix w = a;
  Matrix v = Matrix::identity(n);

  // A QR step shrinks the rotation work for tall inputs and leaves a
  // square factor the Jacobi sweeps handle quickly.
  const bool use_qr = m > n + n / 4;
  HouseholderQr* qr = nullptr;
  HouseholderQr qr_store = use_qr ? HouseholderQr(a) : HouseholderQr(Matrix(0, 0));
  if (use_qr) {
    qr = &qr_store;
    w = qr->r();
  }

  jacobi_orthogonalize(w, v);

  std::vector<double> s(n);
  for (int j = 0; j < n; ++j) {
    double norm = 0.0;
    for (int i = 0; i < w.rows(); ++i) norm += w(i, j) * w(i, j);
    s[j] = std::sqrt(norm);
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return s[i] > s[j]; });

  Matrix u_small(w.rows(), n);
  Matrix vT(n, n);
  std::vector<double> s_sorted(n);
  std::vector<int> zero_cols;
  for (int j = 0; j < n; ++j) {
    const int src = order[j];
    s_sorted[j] = s[src];
    if (s[src] > 0.0) {
      for (int i = 0; i < w.rows(); ++i) u_small(i, j) = w(i, src) / s[src];
    } else {
      zero_cols.push_back(j);
    }
    for (int i = 0; i < n; ++i) vT(j, i) = v(i, src);
  }

  Matrix u = qr ? qr->q_times(u_small) : std::move(u_small);
  complete_basis(u, zero_cols);
  return {std::move(u), std::move(s_sorted), std::move(vT)};
}

}  // namespace

Matrix SvdResult::reconstruct() const {
  Matrix scaled = vT;
  for (int i = 0; i < scaled.rows(); ++i)
    for (int j = 0; j < scaled.cols(); ++j) scaled(i, j) *= s[static_cast<std::size_t>(i)];
  return matmul(u, scaled);
}

SvdResult svd(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw InvalidArgument("svd: empty matrix");
  if (!all_finite(a)) throw InvalidArgument("svd: input has non-finite entries");
  if (a.rows() >= a.cols()) return svd_tall(a);
  SvdResult t = svd_tall(transpose(a));
  return {transpose(t.vT), std::move(t.s), transpose(t.u)};
}

Matrix pseudo_inverse(const Matrix& a, double rcond) {
  if (rcond < 0.0) throw InvalidArgument("pseudo_inverse: rcond must be non-negative");
  const SvdResult dec = svd(a);
  const double s_max = dec.s.empty() ? 0.0 : dec.s[0];
  const double threshold = rcond * std::max(a.rows(), a.cols()) * s_max;
  Matrix scaled = dec.vT;  // rows become v_j * (1/s_j or 0)
  for (int j = 0; j < scaled.rows(); ++j) {
    const double sj = dec.s[static_cast<std::size_t>(j)];
    const double inv = (sj > threshold && sj > 0.0) ? 1.0 / sj : 0.0;
    for (int i = 0; i < scaled.cols(); ++i) scaled(j, i) *= inv;
  }
  return transpose(matmul(dec.u, scaled));
}

}  // namespace mc
