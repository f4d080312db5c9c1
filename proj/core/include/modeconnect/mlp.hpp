#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modeconnect/dataset.hpp"
#include "modeconnect/matrix.hpp"
#include "modeconnect/rng.hpp"

namespace mc {

/// Architecture of a dense ReLU network: layer_sizes = (d0, d1, ..., dL).
/// Hidden layers use ReLU, the output layer is linear.
struct MlpSpec {
  std::vector<int> layer_sizes;

  int layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

/// All weights of a network. Layer k (1-indexed) is a
/// d_k x (d_{k-1} + 1) matrix whose last column is the bias, realized by
/// appending a constant-one feature to the layer input.
struct WeightVector {
  std::vector<Matrix> layers;

  const Matrix& layer(int k) const { return layers[static_cast<std::size_t>(k) - 1]; }
  Matrix& layer(int k) { return layers[static_cast<std::size_t>(k) - 1]; }
  int num_layers() const { return static_cast<int>(layers.size()); }

  MlpSpec derive_spec() const;
  bool same_architecture(const WeightVector& other) const;
};

double dot_flat(const WeightVector& a, const WeightVector& b);
double l2_distance(const WeightVector& a, const WeightVector& b);
bool bitwise_equal(const WeightVector& a, const WeightVector& b);

/// He-style initialization: every entry of layer k (bias column included)
/// is N(0, 2 / d_{k-1}).
WeightVector init_weights(const MlpSpec& spec, Rng& rng);

/// Logits (output_dim x n_samples) of the network on column-wise inputs.
/// Throws InvalidArgument naming the first mismatched layer.
Matrix forward(const MlpSpec& spec, const WeightVector& w, const Matrix& features);

/// Activations entering layer k+1, i.e. [phi(W_k ... phi(W_1 [x;1]));1],
/// shaped (d_k + 1) x n. Layer 0 gives [x;1].
Matrix features_at_layer(const MlpSpec& spec, const WeightVector& w, const Matrix& features, int k);

/// Pre-activation W_k * X_{k-1}, shaped d_k x n.
Matrix preactivation_at_layer(const MlpSpec& spec, const WeightVector& w, const Matrix& features, int k);

/// Mean over samples of -log softmax(logits)[label].
double cross_entropy(const Matrix& logits, const std::vector<int>& labels);

/// Fraction of columns whose argmax matches the label (ties break to the
/// lowest class index).
double accuracy(const Matrix& logits, const std::vector<int>& labels);

struct TrainConfig {
  double lr = 0.01;
  int batch = 128;
  int epochs = 30;
  std::uint64_t seed = 0;
};

/// Per-epoch metrics on the training set, filled when a trace is passed
/// to train_sgd.
struct TrainTrace {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;
};

/// Plain minibatch SGD under cross-entropy. Initialization, shuffling and
/// batch order are all driven by config.seed, so results are
/// deterministic per seed. Throws NumericalError carrying the epoch if
/// the loss becomes non-finite.
WeightVector train_sgd(const MlpSpec& spec, const Dataset& data, const TrainConfig& config,
                       TrainTrace* trace = nullptr);

/// One SGD pass over an already-initialized weight vector (used by
/// train_sgd and by tests that need custom starts).
void train_sgd_inplace(const MlpSpec& spec, WeightVector& w, const Dataset& data, const TrainConfig& config,
                       TrainTrace* trace = nullptr);

}  // namespace mc
