#pragma once

#include <cstdint>

#include "modeconnect/dataset.hpp"

namespace mc {

/// Seeded Gaussian-blob classification task. Class centers sit on a
/// random sphere of radius 4 * cluster_std, so separability is
/// scale-free.
struct SyntheticSpec {
  int classes = 2;
  int dim = 2;
  int samples_per_class = 100;
  double cluster_std = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace mc
