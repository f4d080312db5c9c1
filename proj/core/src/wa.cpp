#include "modeconnect/wa.hpp"

#include <memory>
#include <optional>

#include "modeconnect/direct.hpp"
#include "modeconnect/errors.hpp"
#include "modeconnect/svd.hpp"

namespace mc {

const char* to_string(BaseConnector b) {
  switch (b) {
    case BaseConnector::Linear: return "linear";
    case BaseConnector::Arc: return "arc";
    case BaseConnector::Ot: return "ot";
  }
  return "?";
}

const char* to_string(MultilayerMethod m) {
  switch (m) {
    case MultilayerMethod::LinearWa: return "linear-wa";
    case MultilayerMethod::ArcWa: return "arc-wa";
    case MultilayerMethod::OtWa: return "ot-wa";
    case MultilayerMethod::LinearButterfly: return "linear-bfly";
    case MultilayerMethod::ArcButterfly: return "arc-bfly";
    case MultilayerMethod::OtButterfly: return "ot-bfly";
  }
  return "?";
}

Matrix adjust_layer(const Matrix& w_next_a, const Matrix& x_prev_a, const Matrix& x_prev_b, double rcond) {
  if (x_prev_a.cols() != x_prev_b.cols())
    throw InvalidArgument("adjust_layer: feature matrices have different sample counts");
  if (w_next_a.cols() != x_prev_a.rows())
    throw InvalidArgument("adjust_layer: weight shape " + w_next_a.shape_str() + " does not act on features " +
                          x_prev_a.shape_str());
  return matmul(matmul(w_next_a, x_prev_a), pseudo_inverse(x_prev_b, rcond));
}

Matrix subsample_columns(const Matrix& x, int cap) {
  if (cap <= 0) throw InvalidArgument("subsample_columns: cap must be positive");
  const int n = x.cols();
  if (n <= cap) return x;
  Matrix out(x.rows(), cap);
  for (int q = 0; q < cap; ++q) {
    const int src = static_cast<int>((static_cast<long long>(q) * n) / cap);
    for (int i = 0; i < x.rows(); ++i) out(i, q) = x(i, src);
  }
  return out;
}

namespace {

void relu_inplace(Matrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.data()[i] < 0.0) m.data()[i] = 0.0;
}

// Row-wise path between two weight matrices with bitwise-exact copies at
// t = 0 and t = 1.
class BaseRowPath {
 public:
  BaseRowPath(BaseConnector kind, Matrix from, Matrix to) : kind_(kind), from_(std::move(from)), to_(std::move(to)) {
    if (kind_ == BaseConnector::Arc) {
      const Matrix sets[2] = {from_, to_};
      mu_ = estimate_center(sets).mu;
    } else if (kind_ == BaseConnector::Ot) {
      ot_.emplace(from_, to_);
    }
  }

  Matrix at(double t) const {
    if (t == 0.0) return from_;
    if (t == 1.0) return to_;
    switch (kind_) {
      case BaseConnector::Linear: return linear_mix_rows(from_, to_, t);
      case BaseConnector::Arc: return arc_mix_rows(from_, to_, mu_, t);
      case BaseConnector::Ot: return ot_->at(t);
    }
    throw InvalidArgument("BaseRowPath: unknown connector");
  }

 private:
  BaseConnector kind_;
  Matrix from_, to_;
  std::vector<double> mu_;
  std::optional<RowTransportPath> ot_;
};

// All layer activations X_0..X_{L-1} of one model (constant row
// included); X_0 = [x;1].
std::vector<Matrix> all_features(const MlpSpec& spec, const WeightVector& w, const Matrix& x) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(spec.layers()));
  out.push_back(append_ones_row(x));
  for (int k = 1; k < spec.layers(); ++k) {
    Matrix z = matmul(w.layer(k), out.back());
    relu_inplace(z);
    out.push_back(append_ones_row(z));
  }
  return out;
}

// Solves the next-layer weights against the target output at each
// breakpoint t of the base path and returns the polyline points
// (W_k(t_i), W_{k+1}(t_i)). `assembled` seeds the untouched layers.
std::vector<WeightVector> breakpoint_points(const BaseRowPath& w_k_path, const Matrix& target, const Matrix& sub_input,
                                            const WeightVector& assembled, int k, const WaConfig& cfg,
                                            bool solve_last = true) {
  if (cfg.breakpoints < 2) throw InvalidArgument("WaConfig: breakpoints must be >= 2 (t = 0 and t = 1)");
  std::vector<WeightVector> points;
  points.reserve(static_cast<std::size_t>(cfg.breakpoints));
  for (int i = 0; i < cfg.breakpoints; ++i) {
    const double t = static_cast<double>(i) / (cfg.breakpoints - 1);
    WeightVector point = assembled;
    point.layer(k) = w_k_path.at(t);
    if (i + 1 == cfg.breakpoints && !solve_last) {
      // Caller already holds the solved layer (the stored intermediate).
      points.push_back(std::move(point));
      break;
    }
    Matrix phi = matmul(point.layer(k), sub_input);
    relu_inplace(phi);
    try {
      point.layer(k + 1) = matmul(target, pseudo_inverse(append_ones_row(phi), cfg.rcond));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (weight adjustment at breakpoint t = " + std::to_string(t) + ")");
    }
    points.push_back(std::move(point));
  }
  return points;
}

}  // namespace

ConnectionPath wa_connect_one_hidden(const WeightVector& a, const WeightVector& b, BaseConnector base,
                                     const Dataset& adjust_data, const WaConfig& cfg) {
  if (!a.same_architecture(b)) throw InvalidArgument("wa_connect_one_hidden: endpoint architectures differ");
  if (a.num_layers() != 2) throw InvalidArgument("wa_connect_one_hidden: needs a one-hidden network");
  const MlpSpec spec = a.derive_spec();
  const Matrix x = subsample_columns(adjust_data.features, cfg.adjust_cap);
  const Matrix x0 = append_ones_row(x);
  const Matrix target = forward(spec, a, x);  // endpoint A's logits

  const BaseRowPath w1_path(base, a.layer(1), b.layer(1));
  std::vector<WeightVector> mid = breakpoint_points(w1_path, target, x0, a, 1, cfg);

  ConnectionPath path;
  path.method = std::string(to_string(base)) + "-wa";
  path.theta_a = std::make_shared<const WeightVector>(a);
  path.theta_b = std::make_shared<const WeightVector>(b);

  WeightVector first = mid.front();           // (W1^A, W2(0))
  WeightVector last = mid.back();             // (W1^B, W2(1))
  WeightVector last_b = b;
  path.legs.push_back(PathLeg::polyline("wa-entry", {2}, {a, first}));
  path.legs.push_back(PathLeg::polyline(path.method, {1, 2}, std::move(mid)));
  path.legs.push_back(PathLeg::polyline("wa-exit", {2}, {std::move(last), std::move(last_b)}));
  return path;
}

IntermediatePoint build_intermediate(const WeightVector& a, const WeightVector& b, int k, const Matrix& features,
                                     double rcond) {
  if (!a.same_architecture(b)) throw InvalidArgument("build_intermediate: endpoint architectures differ");
  const int layers = a.num_layers();
  if (k < 2 || k > layers)
    throw InvalidArgument("build_intermediate: k = " + std::to_string(k) + " out of range [2, " +
                          std::to_string(layers) + "]");
  const MlpSpec spec = a.derive_spec();
  const Matrix xa = features_at_layer(spec, a, features, k - 1);
  const Matrix xb = features_at_layer(spec, b, features, k - 1);

  IntermediatePoint point;
  point.layer = k;
  point.theta = a;
  for (int j = 1; j < k; ++j) point.theta.layer(j) = b.layer(j);
  point.theta.layer(k) = adjust_layer(a.layer(k), xa, xb, rcond);
  return point;
}

ConnectionPath wa_connect_multilayer(const WeightVector& a, const WeightVector& b, MultilayerMethod method,
                                     const Dataset& adjust_data, const WaConfig& cfg) {
  if (!a.same_architecture(b)) throw InvalidArgument("wa_connect_multilayer: endpoint architectures differ");
  const int layers = a.num_layers();
  if (layers < 2) throw InvalidArgument("wa_connect_multilayer: needs at least 2 layers");
  const MlpSpec spec = a.derive_spec();

  const bool butterfly = method == MultilayerMethod::LinearButterfly || method == MultilayerMethod::ArcButterfly ||
                         method == MultilayerMethod::OtButterfly;
  BaseConnector base = BaseConnector::Linear;
  if (method == MultilayerMethod::ArcWa || method == MultilayerMethod::ArcButterfly) base = BaseConnector::Arc;
  if (method == MultilayerMethod::OtWa || method == MultilayerMethod::OtButterfly) base = BaseConnector::Ot;

  const Matrix x = subsample_columns(adjust_data.features, cfg.adjust_cap);
  const std::vector<Matrix> xa = all_features(spec, a, x);
  const std::vector<Matrix> xb = all_features(spec, b, x);

  // Intermediate points Theta_k^{AB} for k = 2..last; butterfly skips
  // the last one.
  const int last_intermediate = butterfly ? layers - 1 : layers;
  std::vector<WeightVector> inter;  // inter[k-2] = Theta_k^{AB}
  for (int k = 2; k <= last_intermediate; ++k) {
    WeightVector point = a;
    for (int j = 1; j < k; ++j) point.layer(j) = b.layer(j);
    point.layer(k) = adjust_layer(a.layer(k), xa[static_cast<std::size_t>(k) - 1], xb[static_cast<std::size_t>(k) - 1],
                                  cfg.rcond);
    inter.push_back(std::move(point));
  }

  ConnectionPath path;
  path.method = to_string(method);
  path.theta_a = std::make_shared<const WeightVector>(a);
  path.theta_b = std::make_shared<const WeightVector>(b);

  const int arrows = layers - 1;
  for (int k = 1; k <= arrows; ++k) {
    const WeightVector& start = (k == 1) ? a : inter[static_cast<std::size_t>(k) - 2];
    const bool arrow_to_b = butterfly && k == arrows;
    const WeightVector& end = arrow_to_b ? b : inter[static_cast<std::size_t>(k) - 1];

    if (butterfly) {
      // Particle connection of the (k, k+1) subnetwork. The outgoing bias
      // column is not a particle coordinate and moves linearly.
      const Matrix ps = particle_matrix(start, k);
      const Matrix pe = particle_matrix(end, k);
      auto shared_start = std::make_shared<const WeightVector>(start);
      auto shared_end = std::make_shared<const WeightVector>(end);
      std::function<Matrix(double)> particles_at;
      if (base == BaseConnector::Linear) {
        particles_at = [ps, pe](double t) { return linear_mix_rows(ps, pe, t); };
      } else if (base == BaseConnector::Arc) {
        const Matrix sets[2] = {ps, pe};
        particles_at = [ps, pe, mu = estimate_center(sets).mu](double t) { return arc_mix_rows(ps, pe, mu, t); };
      } else {
        particles_at = [rt = std::make_shared<RowTransportPath>(ps, pe)](double t) { return rt->at(t); };
      }
      path.legs.push_back(PathLeg::forced_endpoints(
          std::string(to_string(base)) + "-bfly", {k, k + 1}, start, end,
          [shared_start, shared_end, particles_at, k](double t) {
            WeightVector out = weights_from_particle_matrix(particles_at(t), *shared_start, k);
            Matrix& wn = out.layer(k + 1);
            const Matrix& na = shared_start->layer(k + 1);
            const Matrix& nb = shared_end->layer(k + 1);
            const int c = wn.cols() - 1;
            for (int i = 0; i < wn.rows(); ++i) wn(i, c) = (1.0 - t) * na(i, c) + t * nb(i, c);
            return out;
          }));
    } else {
      // WA arrow: layer k rows follow the base path, layer k+1 is
      // re-solved per breakpoint. The polyline starts at the arrow start
      // so the move onto the solved surface is its first segment; the
      // last breakpoint reuses the stored intermediate, which keeps the
      // joins bitwise exact.
      const Matrix target = matmul(a.layer(k + 1), xa[static_cast<std::size_t>(k)]);
      const BaseRowPath w_k_path(base, start.layer(k), b.layer(k));
      std::vector<WeightVector> points;
      points.push_back(start);
      std::vector<WeightVector> solved =
          breakpoint_points(w_k_path, target, xb[static_cast<std::size_t>(k) - 1], end, k, cfg,
                            /*solve_last=*/false);
      for (WeightVector& p : solved) points.push_back(std::move(p));
      path.legs.push_back(PathLeg::polyline(std::string(to_string(base)) + "-wa", {k, k + 1}, std::move(points)));
    }
  }

  if (!butterfly) {
    // Last layer moves linearly; the loss is convex in it.
    path.legs.push_back(PathLeg::polyline("wa-exit", {layers}, {inter.back(), b}));
  }
  return path;
}

}  // namespace mc
