#pragma once

#include <cstdint>
#include <memory>

#include "modeconnect/dataset.hpp"
#include "modeconnect/flow.hpp"
#include "modeconnect/mlp.hpp"
#include "modeconnect/path.hpp"

namespace mc {

/// Low-loss weight vectors used to train a global connection model.
struct ModelSet {
  std::vector<WeightVector> members;
  std::vector<std::uint64_t> seeds;  // provenance

  int size() const { return static_cast<int>(members.size()); }
};

struct FlowTrainConfig {
  int steps = 500;
  int batch = 256;
  double lr = 0.01;
  std::uint64_t seed = 0;
  bool fit_whitening = true;
};

/// Maximum-likelihood training: SGD on the negative log-likelihood of
/// the particles under the standard normal pulled back through the flow.
/// Deterministic per seed. Throws NumericalError if the final NLL on the
/// full set exceeds the initial one.
void train_flow_nll(CouplingFlow& flow, const Matrix& particles, const FlowTrainConfig& config);

struct BijectionConfig {
  int steps = 2000;
  int batch = 128;
  double lr = 0.01;
  std::uint64_t seed = 0;
  /// Train at t = 0.5 only; the path loss is typically worst there.
  bool midpoint_only = true;
  bool fit_whitening = true;
};

/// Path-loss training: each step draws two distinct members of V and a
/// mixing parameter t, forms the flow-induced path point, and takes one
/// SGD step on the base network's cross-entropy at that point. The
/// gradient passes through the flow inverse, the mixing formula, and
/// both flow forwards. Members of V are never modified.
void train_bijection(CouplingFlow& flow, const ModelSet& v, const MlpSpec& spec, const Dataset& data,
                     const BijectionConfig& config);

/// Generalized-arc path through a trained flow. A flow trained on models
/// from one pipeline applies to any pair from that pipeline without
/// per-pair state.
ConnectionPath connect_with_flow(const WeightVector& a, const WeightVector& b,
                                 std::shared_ptr<const CouplingFlow> flow);

}  // namespace mc
