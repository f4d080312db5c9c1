#pragma once

#include <memory>
#include <span>
#include <vector>

#include "modeconnect/path.hpp"
#include "modeconnect/particles.hpp"

namespace mc {

enum class CenterSource { EndpointParticles, ModelSet, Zero };

/// Estimated center of the particle distribution, used by the arc
/// formula.
struct CenterEstimate {
  std::vector<double> mu;
  CenterSource source = CenterSource::EndpointParticles;

  static CenterEstimate zero(int dim);
};

/// Coordinate-wise mean over all rows of all supplied particle
/// matrices.
CenterEstimate estimate_center(std::span<const Matrix> particle_sets,
                               CenterSource source = CenterSource::EndpointParticles);

/// Rows mixed as (1-t) x + t y.
Matrix linear_mix_rows(const Matrix& x, const Matrix& y, double t);
/// Rows mixed as mu + cos(pi t / 2)(x - mu) + sin(pi t / 2)(y - mu).
/// This keeps the covariance of centered Gaussian rows constant in t,
/// where the linear mix shrinks it by (1-t)^2 + t^2.
Matrix arc_mix_rows(const Matrix& x, const Matrix& y, std::span<const double> mu, double t);

/// Straight segment (1-t) A + t B over all coordinates.
ConnectionPath linear_connect(const WeightVector& a, const WeightVector& b);

/// Arc connection with an explicit center, applied per hidden-layer-1
/// particle. One-hidden architectures only. The bias column of the
/// output layer belongs to no particle and is interpolated linearly.
ConnectionPath arc_connect_one_hidden(const WeightVector& a, const WeightVector& b, const CenterEstimate& center);

/// Multilayer baseline: every weight-matrix row (bias entry included) is
/// treated as a sample of a per-layer distribution and arced around the
/// per-layer mean of the union of both endpoints' rows.
ConnectionPath arc_connect_rows(const WeightVector& a, const WeightVector& b);

/// Dispatch: particle mode with the union-of-endpoints center for
/// one-hidden networks, row mode otherwise.
ConnectionPath arc_connect(const WeightVector& a, const WeightVector& b);

/// Invertible map on particle space. Batches are row-wise (n x D).
struct NuMap {
  virtual ~NuMap() = default;
  virtual int dim() const = 0;
  virtual Matrix forward(const Matrix& x) const = 0;
  virtual Matrix inverse(const Matrix& y) const = 0;
};

/// Identity map (nu_connect with it coincides with the zero-center arc).
struct IdentityMap final : NuMap {
  explicit IdentityMap(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  Matrix forward(const Matrix& x) const override { return x; }
  Matrix inverse(const Matrix& y) const override { return y; }

 private:
  int dim_;
};

/// Shift map x -> x - mu (nu_connect with it reduces to the arc at mu).
struct ShiftMap final : NuMap {
  explicit ShiftMap(std::vector<double> mu) : mu_(std::move(mu)) {}
  int dim() const override { return static_cast<int>(mu_.size()); }
  Matrix forward(const Matrix& x) const override;
  Matrix inverse(const Matrix& y) const override;

 private:
  std::vector<double> mu_;
};

/// Generalized arc through an invertible map:
/// psi(t) = nu^{-1}[cos(pi t/2) nu(X) + sin(pi t/2) nu(Y)] per particle.
/// Endpoints are forced exact, bypassing nu round-trip error. One-hidden
/// architectures only.
ConnectionPath nu_connect(const WeightVector& a, const WeightVector& b, std::shared_ptr<const NuMap> nu);

}  // namespace mc
