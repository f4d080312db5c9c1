#include "modeconnect/tape.hpp"

#include <cmath>
#include <memory>
#include <utility>

#include "modeconnect/errors.hpp"

namespace mc {

Tape::Id Tape::emplace(Matrix value, bool requires_grad, std::function<void(Tape&)> backprop) {
  if (ran_backward_) throw InvalidArgument("tape: cannot record after backward");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

void Tape::check(Id id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) throw InvalidArgument("tape: bad node id");
}

void Tape::accumulate(Id id, const Matrix& delta) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (!n.adjoint_live) {
    n.adjoint = delta;
    n.adjoint_live = true;
  } else {
    for (std::size_t i = 0; i < n.adjoint.size(); ++i) n.adjoint.data()[i] += delta.data()[i];
  }
}

const Matrix& Tape::grad(Id id) const {
  check(id);
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.adjoint_live && n.adjoint.empty() && !n.value.empty()) {
    // Lazily materialize a zero adjoint of the right shape.
    const_cast<Node&>(n).adjoint = Matrix(n.value.rows(), n.value.cols());
  }
  return n.adjoint;
}

Tape::Id Tape::input(Matrix value) { return emplace(std::move(value), true, {}); }

Tape::Id Tape::constant(Matrix value) { return emplace(std::move(value), false, {}); }

Tape::Id Tape::add(Id a, Id b) {
  check(a), check(b);
  Matrix v = value(a) + value(b);
  const bool rg = requires_grad(a) || requires_grad(b);
  Id out = emplace(std::move(v), rg, {});
  nodes_.back().backprop = [a, b, out](Tape& t) {
    const Matrix& g = t.grad(out);
    t.accumulate(a, g);
    t.accumulate(b, g);
  };
  return out;
}

Tape::Id Tape::sub(Id a, Id b) {
  check(a), check(b);
  Matrix v = value(a) - value(b);
  Id out = emplace(std::move(v), requires_grad(a) || requires_grad(b), {});
  nodes_.back().backprop = [a, b, out](Tape& t) {
    const Matrix& g = t.grad(out);
    t.accumulate(a, g);
    t.accumulate(b, -1.0 * g);
  };
  return out;
}

Tape::Id Tape::mul(Id a, Id b) {
  check(a), check(b);
  Matrix v = hadamard(value(a), value(b));
  Id out = emplace(std::move(v), requires_grad(a) || requires_grad(b), {});
  nodes_.back().backprop = [a, b, out](Tape& t) {
    const Matrix& g = t.grad(out);
    if (t.requires_grad(a)) t.accumulate(a, hadamard(g, t.value(b)));
    if (t.requires_grad(b)) t.accumulate(b, hadamard(g, t.value(a)));
  };
  return out;
}

Tape::Id Tape::scale(Id a, double s) {
  check(a);
  Matrix v = s * value(a);
  Id out = emplace(std::move(v), requires_grad(a), {});
  nodes_.back().backprop = [a, s, out](Tape& t) { t.accumulate(a, s * t.grad(out)); };
  return out;
}

Tape::Id Tape::add_scalar(Id a, double s) {
  check(a);
  Matrix v = value(a);
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] += s;
  Id out = emplace(std::move(v), requires_grad(a), {});
  nodes_.back().backprop = [a, out](Tape& t) { t.accumulate(a, t.grad(out)); };
  return out;
}

Tape::Id Tape::matmul(Id a, Id b) {
  check(a), check(b);
  Matrix v = mc::matmul(value(a), value(b));
  Id out = emplace(std::move(v), requires_grad(a) || requires_grad(b), {});
  nodes_.back().backprop = [a, b, out](Tape& t) {
    const Matrix& g = t.grad(out);
    if (t.requires_grad(a)) t.accumulate(a, matmul_nt(g, t.value(b)));
    if (t.requires_grad(b)) t.accumulate(b, matmul_tn(t.value(a), g));
  };
  return out;
}

Tape::Id Tape::relu(Id a) {
  check(a);
  Matrix v = value(a);
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = v.data()[i] > 0.0 ? v.data()[i] : 0.0;
  Id out = emplace(std::move(v), requires_grad(a), {});
  nodes_.back().backprop = [a, out](Tape& t) {
    const Matrix& g = t.grad(out);
    const Matrix& x = t.value(a);
    Matrix d(g.rows(), g.cols());
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = x.data()[i] > 0.0 ? g.data()[i] : 0.0;
    t.accumulate(a, d);
  };
  return out;
}

Tape::Id Tape::tanh(Id a) {
  check(a);
  Matrix v = value(a);
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = std::tanh(v.data()[i]);
  Id out = emplace(std::move(v), requires_grad(a), {});
  nodes_.back().backprop = [a, out](Tape& t) {
    const Matrix& g = t.grad(out);
    const Matrix& y = t.value(out);
    Matrix d(g.rows(), g.cols());
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
    t.accumulate(a, d);
  };
  return out;
}

Tape::Id Tape::exp(Id a) {
  check(a);
  Matrix v = value(a);
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = std::exp(v.data()[i]);
  Id out = emplace(std::move(v), requires_grad(a), {});
  nodes_.back().backprop = [a, out](Tape& t) {
    t.accumulate(a, hadamard(t.grad(out), t.value(out)));
  };
  return out;
}

Tape::Id Tape::transpose(Id a) {
  check(a);
  Id out = emplace(mc::transpose(value(a)), requires_grad(a), {});
  nodes_.back().backprop = [a, out](Tape& t) { t.accumulate(a, mc::transpose(t.grad(out))); };
  return out;
}

Tape::Id Tape::slice_cols(Id a, int begin, int end) {
  check(a);
  Id out = emplace(mc::slice_cols(value(a), begin, end), requires_grad(a), {});
  nodes_.back().backprop = [a, begin, out](Tape& t) {
    const Matrix& g = t.grad(out);
    const Matrix& x = t.value(a);
    Matrix d(x.rows(), x.cols());
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) d(i, begin + j) = g(i, j);
    t.accumulate(a, d);
  };
  return out;
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  check(a), check(b);
  Id out = emplace(mc::concat_cols(value(a), value(b)), requires_grad(a) || requires_grad(b), {});
  nodes_.back().backprop = [a, b, out](Tape& t) {
    const Matrix& g = t.grad(out);
    const int ca = t.value(a).cols();
    if (t.requires_grad(a)) t.accumulate(a, mc::slice_cols(g, 0, ca));
    if (t.requires_grad(b)) t.accumulate(b, mc::slice_cols(g, ca, g.cols()));
  };
  return out;
}

Tape::Id Tape::concat_rows(Id a, Id b) {
  check(a), check(b);
  Id out = emplace(mc::concat_rows(value(a), value(b)), requires_grad(a) || requires_grad(b), {});
  nodes_.back().backprop = [a, b, out](Tape& t) {
    const Matrix& g = t.grad(out);
    const int ra = t.value(a).rows();
    if (t.requires_grad(a)) t.accumulate(a, mc::slice_rows(g, 0, ra));
    if (t.requires_grad(b)) t.accumulate(b, mc::slice_rows(g, ra, g.rows()));
  };
  return out;
}

Tape::Id Tape::add_row_broadcast(Id a, Id row) {
  check(a), check(row);
  Id out = emplace(mc::add_row_broadcast(value(a), value(row)), requires_grad(a) || requires_grad(row), {});
  nodes_.back().backprop = [a, row, out](Tape& t) {
    const Matrix& g = t.grad(out);
    if (t.requires_grad(a)) t.accumulate(a, g);
    if (t.requires_grad(row)) {
      Matrix d(1, g.cols());
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) d(0, j) += g(i, j);
      t.accumulate(row, d);
    }
  };
  return out;
}

Tape::Id Tape::mul_row_broadcast(Id a, Id row) {
  check(a), check(row);
  const Matrix& x = value(a);
  const Matrix& r = value(row);
  if (r.rows() != 1 || r.cols() != x.cols()) throw InvalidArgument("mul_row_broadcast: bad row shape " + r.shape_str());
  Matrix v(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) v(i, j) = x(i, j) * r(0, j);
  Id out = emplace(std::move(v), requires_grad(a) || requires_grad(row), {});
  nodes_.back().backprop = [a, row, out](Tape& t) {
    const Matrix& g = t.grad(out);
    const Matrix& x2 = t.value(a);
    const Matrix& r2 = t.value(row);
    if (t.requires_grad(a)) {
      Matrix d(g.rows(), g.cols());
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) d(i, j) = g(i, j) * r2(0, j);
      t.accumulate(a, d);
    }
    if (t.requires_grad(row)) {
      Matrix d(1, g.cols());
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) d(0, j) += g(i, j) * x2(i, j);
      t.accumulate(row, d);
    }
  };
  return out;
}

Tape::Id Tape::row_sum(Id a) {
  check(a);
  const Matrix& x = value(a);
  Matrix v(x.rows(), 1);
  for (int i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < x.cols(); ++j) s += x(i, j);
    v(i, 0) = s;
  }
  Id out = emplace(std::move(v), requires_grad(a), {});
  nodes_.back().backprop = [a, out](Tape& t) {
    const Matrix& g = t.grad(out);
    const Matrix& x2 = t.value(a);
    Matrix d(x2.rows(), x2.cols());
    for (int i = 0; i < d.rows(); ++i)
      for (int j = 0; j < d.cols(); ++j) d(i, j) = g(i, 0);
    t.accumulate(a, d);
  };
  return out;
}

Tape::Id Tape::sum_all(Id a) {
  check(a);
  const Matrix& x = value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
  Id out = emplace(Matrix(1, 1, {s}), requires_grad(a), {});
  nodes_.back().backprop = [a, out](Tape& t) {
    const double g = t.grad(out)(0, 0);
    const Matrix& x2 = t.value(a);
    t.accumulate(a, Matrix::filled(x2.rows(), x2.cols(), g));
  };
  return out;
}

Tape::Id Tape::mean_all(Id a) {
  check(a);
  const Matrix& x = value(a);
  if (x.size() == 0) throw InvalidArgument("mean_all: empty node");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
  const double inv = 1.0 / static_cast<double>(x.size());
  Id out = emplace(Matrix(1, 1, {s * inv}), requires_grad(a), {});
  nodes_.back().backprop = [a, inv, out](Tape& t) {
    const double g = t.grad(out)(0, 0) * inv;
    const Matrix& x2 = t.value(a);
    t.accumulate(a, Matrix::filled(x2.rows(), x2.cols(), g));
  };
  return out;
}

Tape::Id Tape::softmax_cross_entropy(Id logits, std::vector<int> labels) {
  check(logits);
  const Matrix& z = value(logits);
  const int classes = z.rows(), n = z.cols();
  if (static_cast<int>(labels.size()) != n)
    throw InvalidArgument("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(n) + " columns");
  // Probabilities are kept for the backward pass.
  auto probs = std::make_shared<Matrix>(classes, n);
  double loss = 0.0;
  for (int q = 0; q < n; ++q) {
    const int label = labels[static_cast<std::size_t>(q)];
    if (label < 0 || label >= classes)
      throw InvalidArgument("softmax_cross_entropy: label " + std::to_string(label) + " out of range [0, " +
                            std::to_string(classes) + ")");
    double zmax = z(0, q);
    for (int c = 1; c < classes; ++c) zmax = std::max(zmax, z(c, q));
    double denom = 0.0;
    for (int c = 0; c < classes; ++c) denom += std::exp(z(c, q) - zmax);
    const double log_denom = std::log(denom);
    loss += log_denom - (z(label, q) - zmax);
    for (int c = 0; c < classes; ++c) (*probs)(c, q) = std::exp(z(c, q) - zmax) / denom;
  }
  loss /= n;
  Id out = emplace(Matrix(1, 1, {loss}), requires_grad(logits), {});
  nodes_.back().backprop = [logits, labels = std::move(labels), probs, out](Tape& t) {
    const double g = t.grad(out)(0, 0);
    const int n2 = probs->cols();
    Matrix d = *probs;
    for (int q = 0; q < n2; ++q) d(labels[static_cast<std::size_t>(q)], q) -= 1.0;
    t.accumulate(logits, (g / n2) * d);
  };
  return out;
}

void Tape::backward(Id root) {
  check(root);
  if (ran_backward_) throw InvalidArgument("backward: tape already differentiated");
  Node& r = nodes_[static_cast<std::size_t>(root)];
  if (r.value.rows() != 1 || r.value.cols() != 1)
    throw InvalidArgument("backward: root must be scalar, got " + r.value.shape_str());
  ran_backward_ = true;
  r.adjoint = Matrix(1, 1, {1.0});
  r.adjoint_live = true;
  for (Id id = root; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.adjoint_live || !n.requires_grad || !n.backprop) continue;
    n.backprop(*this);
  }
}

}  // namespace mc
