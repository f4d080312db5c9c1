#pragma once

#include <vector>

#include "modeconnect/matrix.hpp"

namespace mc {

/// Classification dataset. Samples are the columns of `features`
/// (input_dim x n_samples); labels are class indices in [0, classes).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int classes = 0;

  int samples() const { return features.cols(); }
  int input_dim() const { return features.rows(); }

  /// Columns [begin, end) with their labels.
  Dataset slice(int begin, int end) const;
  /// Throws InvalidArgument when shapes or label ranges are inconsistent.
  void validate() const;
};

}  // namespace mc
