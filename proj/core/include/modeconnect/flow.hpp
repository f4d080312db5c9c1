#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "modeconnect/direct.hpp"
#include "modeconnect/matrix.hpp"
#include "modeconnect/rng.hpp"

namespace mc {

/// One dense layer of a coupling subnet; weights are (in x out) with a
/// separate bias row, applied to row-wise batches as x*w + b.
struct DenseLayer {
  Matrix w;
  Matrix b;
};

/// Small MLP used as a coupling scale or shift function (ReLU hidden
/// layers, linear output).
struct Subnet {
  std::vector<DenseLayer> layers;

  Matrix apply(const Matrix& x) const;
};

/// Affine coupling layer: the masked half passes through and drives
/// scale/shift subnets acting on the other half. Masks are contiguous
/// halves and alternate across consecutive layers.
struct CouplingLayer {
  bool mask_first_half = true;  // which half is the pass-through side
  Subnet s_net;
  Subnet t_net;
};

/// Invertible map on particle space built from affine coupling layers
/// behind an affine whitening stage. With zero subnets and identity
/// whitening the map is the identity with zero log-determinant.
class CouplingFlow final : public NuMap {
 public:
  CouplingFlow() = default;

  /// Identity-initialized flow: hidden subnet layers carry random
  /// weights, final layers are zero, whitening is the identity.
  static CouplingFlow identity_init(int dim, int coupling_layers, int hidden_width, Rng& rng);

  int dim() const override { return dim_; }
  int coupling_layer_count() const { return static_cast<int>(layers_.size()); }
  double scale_bound() const { return scale_bound_; }

  Matrix forward(const Matrix& x) const override;
  /// Forward pass together with the per-sample log |det d nu / dx|
  /// (coupling scales plus the whitening term).
  std::pair<Matrix, std::vector<double>> forward_logdet(const Matrix& x) const;
  Matrix inverse(const Matrix& y) const override;

  /// Mean negative log-likelihood of rows of x under the standard normal
  /// base density pushed through the flow.
  double nll(const Matrix& x) const;

  /// Sets the whitening stage from per-coordinate mean/std of the rows
  /// of `particles` (stds floored away from zero).
  void fit_whitening(const Matrix& particles);
  const std::vector<double>& whiten_mean() const { return whiten_mean_; }
  const std::vector<double>& whiten_std() const { return whiten_std_; }
  Matrix whiten(const Matrix& x) const;
  Matrix unwhiten(const Matrix& z) const;

  std::vector<CouplingLayer>& layers() { return layers_; }
  const std::vector<CouplingLayer>& layers() const { return layers_; }
  /// Column range [begin, end) transformed by coupling layer l (the
  /// complement is the pass-through half).
  std::pair<int, int> transformed_range(int layer) const;
  std::pair<int, int> masked_range(int layer) const;

  void save(const std::string& path) const;
  static CouplingFlow load(const std::string& path);

 private:
  int dim_ = 0;
  double scale_bound_ = 2.0;
  std::vector<double> whiten_mean_;
  std::vector<double> whiten_std_;
  std::vector<CouplingLayer> layers_;
};

}  // namespace mc
