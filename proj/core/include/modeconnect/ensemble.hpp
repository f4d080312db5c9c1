#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "modeconnect/mlp.hpp"

namespace mc {

/// Weight-adjusted ensemble: one member's layers up to the adjusted
/// layer serve as a shared backbone; every other member's next-layer
/// weights are re-solved onto the backbone's features, and the remaining
/// per-member head outputs are averaged as logits.
///
/// `split_from_last` follows the WA(n) naming: the adjusted layer is the
/// n'th counting from the output, so WA(1) adjusts the last layer and
/// needs no per-member heads at all.
class WaEnsemble {
 public:
  WaEnsemble() = default;

  /// Mean of per-member adjusted logits on column-wise inputs. The
  /// backbone runs exactly once per call regardless of member count.
  Matrix predict(const Matrix& features) const;
  /// Per-member adjusted logits (used for the convexity bound checks).
  std::vector<Matrix> member_logits(const Matrix& features) const;

  int members() const { return static_cast<int>(adjusted_next_.size()); }
  int split_from_last() const { return split_from_last_; }
  int adjusted_layer() const { return adjusted_layer_; }
  long backbone_evals() const { return counter_ ? counter_->load() : 0; }
  /// Number of layer applications needed for one member's prediction
  /// (backbone excluded); grows as the split moves away from the output.
  int per_member_layer_count() const;

  void save(const std::string& path) const;
  static WaEnsemble load(const std::string& path);

  friend WaEnsemble build_wa_ensemble(const std::vector<WeightVector>& models, int split_from_last,
                                      const Matrix& features, double rcond, int backbone_index);

 private:
  MlpSpec spec_;
  int split_from_last_ = 1;
  int adjusted_layer_ = 0;                  // 1-indexed layer k = L - n + 1
  int backbone_index_ = 0;
  std::vector<Matrix> backbone_;            // layers 1..k-1 of the backbone member
  std::vector<Matrix> adjusted_next_;       // per member: adjusted layer k
  std::vector<std::vector<Matrix>> heads_;  // per member: layers k+1..L
  std::shared_ptr<std::atomic<long>> counter_;
};

/// Builds the WA(n) ensemble on adjustment features (raw inputs,
/// column-wise). The backbone member keeps its own next-layer weights;
/// every other member k gets W_k F_k pinv(F_1).
WaEnsemble build_wa_ensemble(const std::vector<WeightVector>& models, int split_from_last, const Matrix& features,
                             double rcond = 1e-10, int backbone_index = 0);

/// Baseline: mean softmax probabilities of unmodified members.
Matrix independent_ensemble_probs(const std::vector<WeightVector>& models, const Matrix& features);

/// Column-wise softmax (used by the independent baseline).
Matrix softmax_columns(const Matrix& logits);

}  // namespace mc
