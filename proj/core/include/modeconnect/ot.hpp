#pragma once

#include <utility>
#include <vector>

#include "modeconnect/assignment.hpp"
#include "modeconnect/path.hpp"
#include "modeconnect/particles.hpp"

namespace mc {

/// Ordered pairwise swaps. Starting from the identity array and swapping
/// positions (i, j) in order yields the target permutation.
struct SwapSchedule {
  std::vector<std::pair<int, int>> transpositions;
};

/// Cycle decomposition of pi into position swaps; cycles are processed in
/// increasing order of their minimal element, so the schedule is
/// deterministic. Swap count is n minus the number of cycles.
SwapSchedule permutation_to_swaps(const std::vector<int>& pi);

/// Squared Euclidean distances between the rows of a and b.
Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b);

/// Linear segment exchanging particles i and j of hidden layer k; all
/// other particles stay fixed. At t = 1 the two particles are exactly
/// swapped, so the network output at the end equals the output at the
/// start up to summation order.
PathLeg swap_leg(const WeightVector& w, int hidden_layer, int i, int j);

/// Optimal-transport connection at hidden layer k: a straight transport
/// segment carrying each particle of A to its matched particle of B
/// (matching minimizes total squared particle distance), followed by one
/// swap leg per transposition needed to restore B's particle order. The
/// final point is exactly B.
ConnectionPath ot_connect(const WeightVector& a, const WeightVector& b, int hidden_layer = 1);

/// Piecewise-linear path between the rows of two equally-shaped
/// matrices: transport each row of `a` to its matched row of `b`, then
/// swap rows pairwise into b's order. Used with W_1 rows by the weight
/// adjustment methods and with particle matrices by the butterfly
/// scaffold. Parameterized uniformly over its segments.
class RowTransportPath {
 public:
  RowTransportPath(const Matrix& a, const Matrix& b);

  Matrix at(double t) const;
  int segments() const { return 1 + static_cast<int>(schedule_.transpositions.size()); }
  const Matching& matching() const { return matching_; }

 private:
  Matrix a_, b_;
  Matrix transported_;  // rows of b in a's matched order
  Matching matching_;
  SwapSchedule schedule_;
};

}  // namespace mc
