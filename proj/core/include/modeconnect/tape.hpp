#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "modeconnect/matrix.hpp"

namespace mc {

/// Append-only record of matrix operations with reverse-mode
/// differentiation. Node inputs always reference earlier nodes. A tape is
/// confined to one thread; build a fresh tape per training step.
class Tape {
 public:
  using Id = std::int32_t;

  /// Leaf with gradient tracking.
  Id input(Matrix value);
  /// Leaf without gradient tracking.
  Id constant(Matrix value);

  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);  // elementwise
  Id scale(Id a, double s);
  Id add_scalar(Id a, double s);
  Id matmul(Id a, Id b);
  Id relu(Id a);
  Id tanh(Id a);
  Id exp(Id a);
  Id transpose(Id a);
  Id slice_cols(Id a, int begin, int end);
  Id concat_cols(Id a, Id b);
  Id concat_rows(Id a, Id b);
  /// a (n x d) plus row (1 x d) broadcast over rows.
  Id add_row_broadcast(Id a, Id row);
  /// a (n x d) times row (1 x d) broadcast over rows.
  Id mul_row_broadcast(Id a, Id row);
  Id row_sum(Id a);   // n x d -> n x 1
  Id sum_all(Id a);   // -> 1 x 1
  Id mean_all(Id a);  // -> 1 x 1
  /// Mean cross-entropy of column-wise logits against class labels
  /// (one label per column). Returns a 1 x 1 node.
  Id softmax_cross_entropy(Id logits, std::vector<int> labels);

  /// Reverse pass from a scalar (1 x 1) root. Throws InvalidArgument for
  /// non-scalar roots. Adjoints accumulate into every gradient-tracked
  /// node reachable from the root.
  void backward(Id root);

  const Matrix& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  /// Adjoint of a node after backward(); zero matrix if untouched.
  const Matrix& grad(Id id) const;
  bool requires_grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix adjoint;  // allocated lazily during backward
    bool requires_grad = false;
    bool adjoint_live = false;
    std::function<void(Tape&)> backprop;  // empty for leaves
  };

  Id emplace(Matrix value, bool requires_grad, std::function<void(Tape&)> backprop);
  void accumulate(Id id, const Matrix& delta);
  void check(Id id) const;

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace mc
