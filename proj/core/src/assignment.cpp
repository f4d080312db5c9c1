#include "modeconnect/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "modeconnect/errors.hpp"

namespace mc {

bool is_permutation(const std::vector<int>& pi) {
  std::vector<char> seen(pi.size(), 0);
  for (int v : pi) {
    if (v < 0 || v >= static_cast<int>(pi.size()) || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = 1;
  }
  return true;
}

std::vector<int> inverse_permutation(const std::vector<int>& pi) {
  if (!is_permutation(pi)) throw InvalidArgument("inverse_permutation: input is not a permutation");
  std::vector<int> inv(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) inv[static_cast<std::size_t>(pi[i])] = static_cast<int>(i);
  return inv;
}

Matching solve_assignment(const Matrix& cost) {
  const int n = cost.rows();
  if (cost.rows() != cost.cols()) throw InvalidArgument("solve_assignment: cost matrix must be square");
  if (n == 0) return {{}, 0.0};
  for (std::size_t i = 0; i < cost.size(); ++i)
    if (std::isnan(cost.data()[i])) throw InvalidArgument("solve_assignment: NaN cost entry");

  // Infinities become a large finite sentinel so dual updates stay finite.
  constexpr double kBig = 1e100;
  auto c = [&](int i, int j) { return std::min(cost(i, j), kBig); };

  const double inf = std::numeric_limits<double>::infinity();
  // Shortest augmenting path with potentials, 1-indexed with a dummy
  // column 0 (classic Jonker-Volgenant / Hungarian scheme).
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // match[j] = row assigned to column j
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur =
            c(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    // Augment along the alternating path.
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }

  Matching result;
  result.pi.resize(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) result.pi[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
  result.cost = 0.0;
  for (int i = 0; i < n; ++i) result.cost += cost(i, result.pi[static_cast<std::size_t>(i)]);
  return result;
}

std::string Matching::to_json() const {
  nlohmann::json j;
  j["pi"] = pi;
  j["cost"] = cost;
  return j.dump();
}

}  // namespace mc
