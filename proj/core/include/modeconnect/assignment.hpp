#pragma once

#include <string>
#include <vector>

#include "modeconnect/matrix.hpp"

namespace mc {

/// Optimal row-to-column matching: row i is assigned to column pi[i].
struct Matching {
  std::vector<int> pi;
  double cost = 0.0;

  std::string to_json() const;
};

/// Exact minimum-cost assignment of a square cost matrix via shortest
/// augmenting paths with dual potentials (O(n^3)). Infinite entries are
/// treated as a large finite penalty internally; the reported cost sums
/// the original entries along the returned permutation.
Matching solve_assignment(const Matrix& cost);

std::vector<int> inverse_permutation(const std::vector<int>& pi);
bool is_permutation(const std::vector<int>& pi);

}  // namespace mc
