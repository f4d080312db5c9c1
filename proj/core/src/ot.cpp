#include "modeconnect/ot.hpp"

#include <algorithm>
#include <memory>

#include "modeconnect/errors.hpp"

namespace mc {

SwapSchedule permutation_to_swaps(const std::vector<int>& pi) {
  if (!is_permutation(pi)) throw InvalidArgument("permutation_to_swaps: input is not a permutation");
  SwapSchedule schedule;
  const int n = static_cast<int>(pi.size());
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  for (int a = 0; a < n; ++a) {
    if (visited[static_cast<std::size_t>(a)]) continue;
    int x = a;
    while (!visited[static_cast<std::size_t>(x)]) {
      visited[static_cast<std::size_t>(x)] = 1;
      const int next = pi[static_cast<std::size_t>(x)];
      if (next != a) schedule.transpositions.emplace_back(x, next);
      x = next;
    }
  }
  return schedule;
}

Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("pairwise_sq_dists: row dimensions differ");
  Matrix cost(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const double* ra = a.data() + static_cast<std::size_t>(i) * a.cols();
    for (int j = 0; j < b.rows(); ++j) {
      const double* rb = b.data() + static_cast<std::size_t>(j) * b.cols();
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) {
        const double d = ra[k] - rb[k];
        s += d * d;
      }
      cost(i, j) = s;
    }
  }
  return cost;
}

namespace {

// Source map after applying the first `count` transpositions to pi.
std::vector<int> sigma_after(const std::vector<int>& pi, const SwapSchedule& schedule, int count) {
  std::vector<int> sigma = pi;
  for (int s = 0; s < count; ++s) {
    const auto& [p, q] = schedule.transpositions[static_cast<std::size_t>(s)];
    std::swap(sigma[static_cast<std::size_t>(p)], sigma[static_cast<std::size_t>(q)]);
  }
  return sigma;
}

// Rows of `source` rearranged by sigma, with rows p and q mid-exchange.
// u = 0 and u = 1 degenerate to pure copies, keeping boundaries bitwise
// exact.
Matrix rows_with_partial_swap(const Matrix& source, const std::vector<int>& sigma, int p, int q, double u) {
  Matrix out(source.rows(), source.cols());
  for (int r = 0; r < out.rows(); ++r) {
    const double* src = source.data() + static_cast<std::size_t>(sigma[static_cast<std::size_t>(r)]) * source.cols();
    std::copy(src, src + source.cols(), out.data() + static_cast<std::size_t>(r) * out.cols());
  }
  if (p != q && u != 0.0) {
    const double* rp = source.data() + static_cast<std::size_t>(sigma[static_cast<std::size_t>(p)]) * source.cols();
    const double* rq = source.data() + static_cast<std::size_t>(sigma[static_cast<std::size_t>(q)]) * source.cols();
    double* op = out.data() + static_cast<std::size_t>(p) * out.cols();
    double* oq = out.data() + static_cast<std::size_t>(q) * out.cols();
    if (u == 1.0) {
      std::copy(rq, rq + out.cols(), op);
      std::copy(rp, rp + out.cols(), oq);
    } else {
      for (int k = 0; k < out.cols(); ++k) {
        op[k] = (1.0 - u) * rp[k] + u * rq[k];
        oq[k] = (1.0 - u) * rq[k] + u * rp[k];
      }
    }
  }
  return out;
}

struct OtContext {
  Matrix pb;                // target particle matrix
  WeightVector tmpl;        // carries B's bias column and the shared layers
  int hidden_layer = 1;
  std::vector<int> pi;
  SwapSchedule schedule;
};

}  // namespace

PathLeg swap_leg(const WeightVector& w, int hidden_layer, int i, int j) {
  const Matrix particles = particle_matrix(w, hidden_layer);
  const int n = particles.rows();
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw InvalidArgument("swap_leg: particle index out of range [0, " + std::to_string(n) + ")");
  auto ctx = std::make_shared<const std::pair<Matrix, WeightVector>>(particles, w);
  auto k = hidden_layer;
  return PathLeg::closed_form("swap", {k, k + 1}, [ctx, k, i, j](double t) {
    std::vector<int> identity(static_cast<std::size_t>(ctx->first.rows()));
    for (std::size_t r = 0; r < identity.size(); ++r) identity[r] = static_cast<int>(r);
    const Matrix p = rows_with_partial_swap(ctx->first, identity, i, j, t);
    return weights_from_particle_matrix(p, ctx->second, k);
  });
}

ConnectionPath ot_connect(const WeightVector& a, const WeightVector& b, int hidden_layer) {
  if (!a.same_architecture(b)) throw InvalidArgument("ot_connect: endpoint architectures differ");
  if (hidden_layer < 1 || hidden_layer > a.num_layers() - 1)
    throw InvalidArgument("ot_connect: hidden layer out of range");
  // Layers outside (k, k+1) must agree, otherwise the swap stage cannot
  // end at B.
  for (int k = 1; k <= a.num_layers(); ++k) {
    if (k == hidden_layer || k == hidden_layer + 1) continue;
    if (max_abs_diff(a.layer(k), b.layer(k)) != 0.0)
      throw InvalidArgument("ot_connect: endpoints differ in layer " + std::to_string(k) +
                            ", outside the connected subnetwork");
  }

  const Matrix pa = particle_matrix(a, hidden_layer);
  const Matrix pb = particle_matrix(b, hidden_layer);
  const Matching matching = solve_assignment(pairwise_sq_dists(pa, pb));

  auto ctx = std::make_shared<OtContext>();
  ctx->pb = pb;
  ctx->hidden_layer = hidden_layer;
  ctx->pi = matching.pi;
  ctx->schedule = permutation_to_swaps(inverse_permutation(matching.pi));
  // Template with B's outgoing bias column (and B's values for every
  // layer outside the subnetwork, which equal A's by the check above).
  ctx->tmpl = b;

  ConnectionPath path;
  path.method = "ot";
  path.theta_a = std::make_shared<const WeightVector>(a);
  path.theta_b = std::make_shared<const WeightVector>(b);

  // Transport leg: straight segment from A to B's particles in matched
  // order. Only layers k and k+1 move.
  {
    Matrix pb_pi(pb.rows(), pb.cols());
    for (int i = 0; i < pb.rows(); ++i) {
      const double* src = pb.data() + static_cast<std::size_t>(matching.pi[static_cast<std::size_t>(i)]) * pb.cols();
      std::copy(src, src + pb.cols(), pb_pi.data() + static_cast<std::size_t>(i) * pb.cols());
    }
    const WeightVector transported = weights_from_particle_matrix(pb_pi, ctx->tmpl, hidden_layer);
    auto wa = std::make_shared<const WeightVector>(a);
    auto wm = std::make_shared<const WeightVector>(transported);
    path.legs.push_back(
        PathLeg::closed_form("ot-transport", {hidden_layer, hidden_layer + 1}, [wa, wm](double t) {
          WeightVector out = *wa;
          for (std::size_t k = 0; k < out.layers.size(); ++k) {
            const double u = 1.0 - t;
            for (std::size_t i = 0; i < out.layers[k].size(); ++i)
              out.layers[k].data()[i] = u * wa->layers[k].data()[i] + t * wm->layers[k].data()[i];
          }
          return out;
        }));
  }

  for (int s = 0; s < static_cast<int>(ctx->schedule.transpositions.size()); ++s) {
    path.legs.push_back(PathLeg::closed_form(
        "ot-swap", {hidden_layer, hidden_layer + 1}, [ctx, s](double t) {
          const std::vector<int> sigma = sigma_after(ctx->pi, ctx->schedule, s);
          const auto& [p, q] = ctx->schedule.transpositions[static_cast<std::size_t>(s)];
          const Matrix particles = rows_with_partial_swap(ctx->pb, sigma, p, q, t);
          return weights_from_particle_matrix(particles, ctx->tmpl, ctx->hidden_layer);
        }));
  }
  return path;
}

RowTransportPath::RowTransportPath(const Matrix& a, const Matrix& b) : a_(a), b_(b) {
  if (!a.same_shape(b)) throw InvalidArgument("RowTransportPath: shape mismatch");
  matching_ = solve_assignment(pairwise_sq_dists(a, b));
  schedule_ = permutation_to_swaps(inverse_permutation(matching_.pi));
  transported_ = Matrix(b.rows(), b.cols());
  for (int i = 0; i < b.rows(); ++i) {
    const double* src = b.data() + static_cast<std::size_t>(matching_.pi[static_cast<std::size_t>(i)]) * b.cols();
    std::copy(src, src + b.cols(), transported_.data() + static_cast<std::size_t>(i) * b.cols());
  }
}

Matrix RowTransportPath::at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("RowTransportPath::at: t outside [0,1]");
  const int total = segments();
  const double scaled = t * total;
  int seg = static_cast<int>(scaled);
  if (seg >= total) seg = total - 1;
  const double u = scaled - seg;
  if (seg == 0) {
    Matrix out(a_.rows(), a_.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
      out.data()[i] = (1.0 - u) * a_.data()[i] + u * transported_.data()[i];
    return out;
  }
  const std::vector<int> sigma = sigma_after(matching_.pi, schedule_, seg - 1);
  const auto& [p, q] = schedule_.transpositions[static_cast<std::size_t>(seg) - 1];
  return rows_with_partial_swap(b_, sigma, p, q, u);
}

}  // namespace mc
