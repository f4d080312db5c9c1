#pragma once

#include <cstdint>
#include <vector>

#include "modeconnect/matrix.hpp"

namespace mc {

/// Deterministic random generator (xoshiro256++ seeded via splitmix64).
/// The stream depends only on the seed, not on the standard library, so
/// identical seeds reproduce identical values across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();
  /// Uniform integer in [0, n).
  int uniform_int(int n);
  /// Standard normal via Box-Muller (pairs cached).
  double normal();
  double normal(double mean, double std);

  /// Derives an independent generator; distinct `stream` values give
  /// unrelated streams for the same parent seed.
  Rng fork(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      const int j = uniform_int(i + 1);
      std::swap(v[i], v[static_cast<std::size_t>(j)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Matrix with i.i.d. N(mean, std^2) entries in row-major draw order.
Matrix sample_gaussian(Rng& rng, int rows, int cols, double mean, double std);

}  // namespace mc
