#include "modeconnect/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modeconnect/errors.hpp"
#include "modeconnect/tape.hpp"

namespace mc {

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw InvalidArgument("MlpSpec: need at least one layer (input and output sizes)");
  for (int s : layer_sizes)
    if (s < 1) throw InvalidArgument("MlpSpec: all layer sizes must be >= 1");
}

void Dataset::validate() const {
  if (classes < 2) throw InvalidArgument("Dataset: needs at least 2 classes");
  if (static_cast<int>(labels.size()) != features.cols())
    throw InvalidArgument("Dataset: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(features.cols()) + " feature columns");
  for (int l : labels)
    if (l < 0 || l >= classes) throw InvalidArgument("Dataset: label " + std::to_string(l) + " out of range");
}

Dataset Dataset::slice(int begin, int end) const {
  Dataset out;
  out.features = slice_cols(features, begin, end);
  out.labels.assign(labels.begin() + begin, labels.begin() + end);
  out.classes = classes;
  return out;
}

MlpSpec WeightVector::derive_spec() const {
  if (layers.empty()) throw InvalidArgument("WeightVector: empty");
  MlpSpec spec;
  spec.layer_sizes.push_back(layers.front().cols() - 1);
  for (const Matrix& w : layers) spec.layer_sizes.push_back(w.rows());
  spec.validate();
  return spec;
}

bool WeightVector::same_architecture(const WeightVector& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (!layers[i].same_shape(other.layers[i])) return false;
  return true;
}

double dot_flat(const WeightVector& a, const WeightVector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.layers.size(); ++k)
    for (std::size_t i = 0; i < a.layers[k].size(); ++i) s += a.layers[k].data()[i] * b.layers[k].data()[i];
  return s;
}

double l2_distance(const WeightVector& a, const WeightVector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    const double* pa = a.layers[k].data();
    const double* pb = b.layers[k].data();
    for (std::size_t i = 0; i < a.layers[k].size(); ++i) {
      const double d = pa[i] - pb[i];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

bool bitwise_equal(const WeightVector& a, const WeightVector& b) {
  if (!a.same_architecture(b)) return false;
  for (std::size_t k = 0; k < a.layers.size(); ++k)
    for (std::size_t i = 0; i < a.layers[k].size(); ++i)
      if (a.layers[k].data()[i] != b.layers[k].data()[i]) return false;
  return true;
}

WeightVector init_weights(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  WeightVector w;
  for (int k = 1; k <= spec.layers(); ++k) {
    const int fan_in = spec.layer_sizes[static_cast<std::size_t>(k) - 1];
    const double std = std::sqrt(2.0 / fan_in);
    w.layers.push_back(sample_gaussian(rng, spec.layer_sizes[static_cast<std::size_t>(k)], fan_in + 1, 0.0, std));
  }
  return w;
}

namespace {

void check_shapes(const MlpSpec& spec, const WeightVector& w, const Matrix& features) {
  spec.validate();
  if (w.num_layers() != spec.layers())
    throw InvalidArgument("forward: weight vector has " + std::to_string(w.num_layers()) + " layers, spec has " +
                          std::to_string(spec.layers()));
  if (features.rows() != spec.input_dim())
    throw InvalidArgument("forward: features have " + std::to_string(features.rows()) + " rows, input dim is " +
                          std::to_string(spec.input_dim()));
  for (int k = 1; k <= spec.layers(); ++k) {
    const Matrix& wk = w.layer(k);
    if (wk.rows() != spec.layer_sizes[static_cast<std::size_t>(k)] ||
        wk.cols() != spec.layer_sizes[static_cast<std::size_t>(k) - 1] + 1)
      throw InvalidArgument("forward: layer " + std::to_string(k) + " has shape " + wk.shape_str() + ", expected " +
                            std::to_string(spec.layer_sizes[static_cast<std::size_t>(k)]) + "x" +
                            std::to_string(spec.layer_sizes[static_cast<std::size_t>(k) - 1] + 1));
  }
}

void relu_inplace(Matrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.data()[i] < 0.0) m.data()[i] = 0.0;
}

}  // namespace

Matrix forward(const MlpSpec& spec, const WeightVector& w, const Matrix& features) {
  check_shapes(spec, w, features);
  Matrix x = append_ones_row(features);
  for (int k = 1; k <= spec.layers(); ++k) {
    Matrix z = matmul(w.layer(k), x);
    if (k == spec.layers()) return z;
    relu_inplace(z);
    x = append_ones_row(z);
  }
  return x;  // unreachable for valid specs
}

Matrix features_at_layer(const MlpSpec& spec, const WeightVector& w, const Matrix& features, int k) {
  check_shapes(spec, w, features);
  if (k < 0 || k >= spec.layers())
    throw InvalidArgument("features_at_layer: k = " + std::to_string(k) + " out of range [0, " +
                          std::to_string(spec.layers()) + ")");
  Matrix x = append_ones_row(features);
  for (int j = 1; j <= k; ++j) {
    Matrix z = matmul(w.layer(j), x);
    relu_inplace(z);
    x = append_ones_row(z);
  }
  return x;
}

Matrix preactivation_at_layer(const MlpSpec& spec, const WeightVector& w, const Matrix& features, int k) {
  if (k < 1 || k > spec.layers()) throw InvalidArgument("preactivation_at_layer: k out of range");
  return matmul(w.layer(k), features_at_layer(spec, w, features, k - 1));
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  const int classes = logits.rows(), n = logits.cols();
  if (classes < 2) throw InvalidArgument("cross_entropy: needs at least 2 classes");
  if (static_cast<int>(labels.size()) != n) throw InvalidArgument("cross_entropy: label count mismatch");
  double loss = 0.0;
  for (int q = 0; q < n; ++q) {
    const int label = labels[static_cast<std::size_t>(q)];
    if (label < 0 || label >= classes)
      throw InvalidArgument("cross_entropy: label " + std::to_string(label) + " out of range");
    double zmax = logits(0, q);
    for (int c = 1; c < classes; ++c) zmax = std::max(zmax, logits(c, q));
    double denom = 0.0;
    for (int c = 0; c < classes; ++c) denom += std::exp(logits(c, q) - zmax);
    loss += std::log(denom) - (logits(label, q) - zmax);
  }
  return loss / n;
}

double accuracy(const Matrix& logits, const std::vector<int>& labels) {
  const int n = logits.cols();
  if (static_cast<int>(labels.size()) != n) throw InvalidArgument("accuracy: label count mismatch");
  if (n == 0) return 0.0;
  int correct = 0;
  for (int q = 0; q < n; ++q) {
    int best = 0;
    for (int c = 1; c < logits.rows(); ++c)
      if (logits(c, q) > logits(best, q)) best = c;
    if (best == labels[static_cast<std::size_t>(q)]) ++correct;
  }
  return static_cast<double>(correct) / n;
}

void train_sgd_inplace(const MlpSpec& spec, WeightVector& w, const Dataset& data, const TrainConfig& config,
                       TrainTrace* trace) {
  data.validate();
  check_shapes(spec, w, data.features);
  if (config.lr < 0.0 || config.batch <= 0 || config.epochs < 0)
    throw InvalidArgument("train_sgd: lr must be >= 0 and batch/epochs positive");
  if (data.classes != spec.output_dim())
    throw InvalidArgument("train_sgd: dataset has " + std::to_string(data.classes) + " classes, output dim is " +
                          std::to_string(spec.output_dim()));

  Rng shuffle_rng = Rng(config.seed).fork(1);
  const int n = data.samples();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    long correct = 0;
    for (int start = 0; start < n; start += config.batch) {
      const int end = std::min(n, start + config.batch);
      const int bs = end - start;
      Matrix xb(data.features.rows(), bs);
      std::vector<int> yb(static_cast<std::size_t>(bs));
      for (int j = 0; j < bs; ++j) {
        const int src = order[static_cast<std::size_t>(start + j)];
        for (int i = 0; i < xb.rows(); ++i) xb(i, j) = data.features(i, src);
        yb[static_cast<std::size_t>(j)] = data.labels[static_cast<std::size_t>(src)];
      }

      Tape tape;
      std::vector<Tape::Id> weight_ids;
      weight_ids.reserve(w.layers.size());
      for (const Matrix& wk : w.layers) weight_ids.push_back(tape.input(wk));
      Tape::Id x = tape.constant(append_ones_row(xb));
      const Tape::Id ones = tape.constant(Matrix::filled(1, bs, 1.0));
      Tape::Id logits = 0;
      for (int k = 1; k <= spec.layers(); ++k) {
        Tape::Id z = tape.matmul(weight_ids[static_cast<std::size_t>(k) - 1], x);
        if (k == spec.layers()) {
          logits = z;
        } else {
          x = tape.concat_rows(tape.relu(z), ones);
        }
      }
      const Tape::Id loss = tape.softmax_cross_entropy(logits, yb);
      const double loss_value = tape.value(loss)(0, 0);
      if (!std::isfinite(loss_value))
        throw NumericalError("train_sgd: loss diverged (non-finite) at epoch " + std::to_string(epoch));
      tape.backward(loss);

      for (std::size_t k = 0; k < w.layers.size(); ++k) {
        const Matrix& g = tape.grad(weight_ids[k]);
        double* dst = w.layers[k].data();
        for (std::size_t i = 0; i < w.layers[k].size(); ++i) dst[i] -= config.lr * g.data()[i];
      }

      if (trace) {
        epoch_loss += loss_value * bs;
        correct += static_cast<long>(std::lround(accuracy(tape.value(logits), yb) * bs));
      }
    }
    if (trace) {
      trace->epoch_loss.push_back(epoch_loss / n);
      trace->epoch_accuracy.push_back(static_cast<double>(correct) / n);
    }
  }
}

WeightVector train_sgd(const MlpSpec& spec, const Dataset& data, const TrainConfig& config, TrainTrace* trace) {
  Rng init_rng = Rng(config.seed).fork(0);
  WeightVector w = init_weights(spec, init_rng);
  train_sgd_inplace(spec, w, data, config, trace);
  return w;
}

}  // namespace mc
