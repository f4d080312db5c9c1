#include "modeconnect/flow_train.hpp"

#include <cmath>

#include "modeconnect/errors.hpp"
#include "modeconnect/particles.hpp"
#include "modeconnect/tape.hpp"

namespace mc {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

struct TapeSubnet {
  std::vector<std::pair<Tape::Id, Tape::Id>> dense;  // (w, b) per layer
};

struct TapeFlowParams {
  std::vector<TapeSubnet> s_nets;
  std::vector<TapeSubnet> t_nets;
};

TapeFlowParams register_flow_params(Tape& tape, const CouplingFlow& flow) {
  TapeFlowParams params;
  for (const CouplingLayer& layer : flow.layers()) {
    TapeSubnet s, t;
    for (const DenseLayer& d : layer.s_net.layers) s.dense.emplace_back(tape.input(d.w), tape.input(d.b));
    for (const DenseLayer& d : layer.t_net.layers) t.dense.emplace_back(tape.input(d.w), tape.input(d.b));
    params.s_nets.push_back(std::move(s));
    params.t_nets.push_back(std::move(t));
  }
  return params;
}

Tape::Id subnet_on_tape(Tape& tape, const TapeSubnet& net, Tape::Id x) {
  Tape::Id h = x;
  for (std::size_t l = 0; l < net.dense.size(); ++l) {
    h = tape.add_row_broadcast(tape.matmul(h, net.dense[l].first), net.dense[l].second);
    if (l + 1 < net.dense.size()) h = tape.relu(h);
  }
  return h;
}

// Bounded scale output: scale_bound * tanh(raw).
Tape::Id bounded_scale(Tape& tape, const CouplingFlow& flow, Tape::Id raw) {
  return tape.scale(tape.tanh(raw), flow.scale_bound());
}

// Coupling stack forward in whitened space. If logdet_out is non-null it
// receives a (n x 1) node with the per-sample coupling log-determinant.
Tape::Id flow_forward_on_tape(Tape& tape, const CouplingFlow& flow, const TapeFlowParams& params, Tape::Id z,
                              Tape::Id* logdet_out) {
  Tape::Id logdet = -1;
  for (int l = 0; l < flow.coupling_layer_count(); ++l) {
    const auto [m0, m1] = flow.masked_range(l);
    const auto [u0, u1] = flow.transformed_range(l);
    const Tape::Id xm = tape.slice_cols(z, m0, m1);
    const Tape::Id xu = tape.slice_cols(z, u0, u1);
    const Tape::Id s = bounded_scale(tape, flow, subnet_on_tape(tape, params.s_nets[static_cast<std::size_t>(l)], xm));
    const Tape::Id t = subnet_on_tape(tape, params.t_nets[static_cast<std::size_t>(l)], xm);
    const Tape::Id yu = tape.add(tape.mul(xu, tape.exp(s)), t);
    z = flow.layers()[static_cast<std::size_t>(l)].mask_first_half ? tape.concat_cols(xm, yu)
                                                                   : tape.concat_cols(yu, xm);
    if (logdet_out) {
      const Tape::Id ld = tape.row_sum(s);
      logdet = (logdet < 0) ? ld : tape.add(logdet, ld);
    }
  }
  if (logdet_out) *logdet_out = logdet;
  return z;
}

// Coupling stack inverse in whitened space (layers reversed, exact
// algebraic inverse of each).
Tape::Id flow_inverse_on_tape(Tape& tape, const CouplingFlow& flow, const TapeFlowParams& params, Tape::Id y) {
  for (int l = flow.coupling_layer_count() - 1; l >= 0; --l) {
    const auto [m0, m1] = flow.masked_range(l);
    const auto [u0, u1] = flow.transformed_range(l);
    const Tape::Id ym = tape.slice_cols(y, m0, m1);
    const Tape::Id yu = tape.slice_cols(y, u0, u1);
    const Tape::Id s = bounded_scale(tape, flow, subnet_on_tape(tape, params.s_nets[static_cast<std::size_t>(l)], ym));
    const Tape::Id t = subnet_on_tape(tape, params.t_nets[static_cast<std::size_t>(l)], ym);
    const Tape::Id xu = tape.mul(tape.sub(yu, t), tape.exp(tape.scale(s, -1.0)));
    y = flow.layers()[static_cast<std::size_t>(l)].mask_first_half ? tape.concat_cols(ym, xu)
                                                                   : tape.concat_cols(xu, ym);
  }
  return y;
}

void apply_sgd_step(CouplingFlow& flow, const Tape& tape, const TapeFlowParams& params, double lr) {
  for (std::size_t l = 0; l < flow.layers().size(); ++l) {
    CouplingLayer& layer = flow.layers()[l];
    for (int which = 0; which < 2; ++which) {
      Subnet& net = which == 0 ? layer.s_net : layer.t_net;
      const TapeSubnet& ids = which == 0 ? params.s_nets[l] : params.t_nets[l];
      for (std::size_t d = 0; d < net.layers.size(); ++d) {
        const Matrix& gw = tape.grad(ids.dense[d].first);
        const Matrix& gb = tape.grad(ids.dense[d].second);
        for (std::size_t i = 0; i < net.layers[d].w.size(); ++i) net.layers[d].w.data()[i] -= lr * gw.data()[i];
        for (std::size_t i = 0; i < net.layers[d].b.size(); ++i) net.layers[d].b.data()[i] -= lr * gb.data()[i];
      }
    }
  }
}

Matrix take_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<int>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double* src = m.data() + static_cast<std::size_t>(idx[i]) * m.cols();
    std::copy(src, src + m.cols(), out.data() + i * m.cols());
  }
  return out;
}

}  // namespace

void train_flow_nll(CouplingFlow& flow, const Matrix& particles, const FlowTrainConfig& config) {
  if (particles.rows() < 1) throw InvalidArgument("train_flow_nll: no particles");
  if (particles.cols() != flow.dim()) throw InvalidArgument("train_flow_nll: particle dimension mismatch");
  if (config.steps < 0 || config.batch <= 0 || config.lr < 0.0)
    throw InvalidArgument("train_flow_nll: config values must be positive");

  if (config.fit_whitening) flow.fit_whitening(particles);
  const double initial_nll = flow.nll(particles);

  Rng rng(config.seed);
  const int n = particles.rows();
  for (int step = 0; step < config.steps; ++step) {
    std::vector<int> idx(static_cast<std::size_t>(std::min(config.batch, n)));
    for (int& i : idx) i = rng.uniform_int(n);
    const Matrix batch = flow.whiten(take_rows(particles, idx));

    Tape tape;
    const TapeFlowParams params = register_flow_params(tape, flow);
    const Tape::Id z = tape.constant(batch);
    Tape::Id logdet = -1;
    const Tape::Id y = flow_forward_on_tape(tape, flow, params, z, &logdet);
    // 0.5 ||y||^2 - logdet, averaged; constant terms drop out of the
    // gradient.
    const Tape::Id obj = tape.mean_all(tape.sub(tape.scale(tape.row_sum(tape.mul(y, y)), 0.5), logdet));
    if (!std::isfinite(tape.value(obj)(0, 0)))
      throw NumericalError("train_flow_nll: objective diverged at step " + std::to_string(step));
    tape.backward(obj);
    apply_sgd_step(flow, tape, params, config.lr);
  }

  const double final_nll = flow.nll(particles);
  if (!(final_nll <= initial_nll))
    throw NumericalError("train_flow_nll: final NLL " + std::to_string(final_nll) + " above initial " +
                         std::to_string(initial_nll));
}

void train_bijection(CouplingFlow& flow, const ModelSet& v, const MlpSpec& spec, const Dataset& data,
                     const BijectionConfig& config) {
  if (v.size() < 2)
    throw InvalidArgument(
        "train_bijection: model set needs at least 2 members (endpoints are drawn as distinct elements of V)");
  spec.validate();
  data.validate();
  if (spec.layers() != 2) throw InvalidArgument("train_bijection: flows connect one-hidden networks");
  if (config.steps < 0 || config.batch <= 0 || config.lr < 0.0)
    throw InvalidArgument("train_bijection: config values must be positive");

  const int members = v.size();
  std::vector<Matrix> raw_particles;
  raw_particles.reserve(static_cast<std::size_t>(members));
  for (const WeightVector& m : v.members) {
    if (!m.same_architecture(v.members.front())) throw InvalidArgument("train_bijection: member architectures differ");
    raw_particles.push_back(particle_matrix(m, 1));
  }
  if (raw_particles.front().cols() != flow.dim())
    throw InvalidArgument("train_bijection: flow dimension " + std::to_string(flow.dim()) +
                          " != particle dimension " + std::to_string(raw_particles.front().cols()));

  if (config.fit_whitening) {
    Matrix stacked = raw_particles.front();
    for (int m = 1; m < members; ++m) stacked = concat_rows(stacked, raw_particles[static_cast<std::size_t>(m)]);
    flow.fit_whitening(stacked);
  }
  std::vector<Matrix> whitened;
  whitened.reserve(static_cast<std::size_t>(members));
  for (const Matrix& p : raw_particles) whitened.push_back(flow.whiten(p));

  const int d = spec.input_dim();
  const int dim = flow.dim();
  const int n = data.samples();
  Rng rng(config.seed);

  for (int step = 0; step < config.steps; ++step) {
    const int ia = rng.uniform_int(members);
    int ib = rng.uniform_int(members - 1);
    if (ib >= ia) ++ib;
    const double t = config.midpoint_only ? 0.5 : rng.uniform();

    std::vector<int> idx(static_cast<std::size_t>(std::min(config.batch, n)));
    std::vector<int> labels(idx.size());
    for (std::size_t q = 0; q < idx.size(); ++q) {
      idx[q] = rng.uniform_int(n);
      labels[q] = data.labels[static_cast<std::size_t>(idx[q])];
    }
    Matrix xb(data.features.rows(), static_cast<int>(idx.size()));
    for (std::size_t q = 0; q < idx.size(); ++q)
      for (int i = 0; i < xb.rows(); ++i) xb(i, static_cast<int>(q)) = data.features(i, idx[q]);

    Tape tape;
    const TapeFlowParams params = register_flow_params(tape, flow);
    const Tape::Id za = tape.constant(whitened[static_cast<std::size_t>(ia)]);
    const Tape::Id zb = tape.constant(whitened[static_cast<std::size_t>(ib)]);
    const Tape::Id ya = flow_forward_on_tape(tape, flow, params, za, nullptr);
    const Tape::Id yb = flow_forward_on_tape(tape, flow, params, zb, nullptr);
    const Tape::Id mixed = tape.add(tape.scale(ya, std::cos(kHalfPi * t)), tape.scale(yb, std::sin(kHalfPi * t)));
    const Tape::Id xw = flow_inverse_on_tape(tape, flow, params, mixed);

    // Back to particle space, then into the weight matrices.
    Matrix mean_row(1, dim), std_row(1, dim);
    for (int j = 0; j < dim; ++j) {
      mean_row(0, j) = flow.whiten_mean()[static_cast<std::size_t>(j)];
      std_row(0, j) = flow.whiten_std()[static_cast<std::size_t>(j)];
    }
    const Tape::Id particles =
        tape.add_row_broadcast(tape.mul_row_broadcast(xw, tape.constant(std_row)), tape.constant(mean_row));
    const Tape::Id w1 = tape.concat_cols(tape.slice_cols(particles, 1, d + 1), tape.slice_cols(particles, 0, 1));
    const Tape::Id w2_main = tape.transpose(tape.slice_cols(particles, d + 1, dim));
    // The output bias column is not a particle coordinate; it moves
    // linearly between the endpoints and takes no flow gradient.
    const Matrix& wa2 = v.members[static_cast<std::size_t>(ia)].layer(2);
    const Matrix& wb2 = v.members[static_cast<std::size_t>(ib)].layer(2);
    Matrix bias_col(wa2.rows(), 1);
    for (int i = 0; i < wa2.rows(); ++i)
      bias_col(i, 0) = (1.0 - t) * wa2(i, wa2.cols() - 1) + t * wb2(i, wb2.cols() - 1);
    const Tape::Id w2 = tape.concat_cols(w2_main, tape.constant(bias_col));

    const Tape::Id x0 = tape.constant(append_ones_row(xb));
    const Tape::Id ones = tape.constant(Matrix::filled(1, xb.cols(), 1.0));
    const Tape::Id hidden = tape.concat_rows(tape.relu(tape.matmul(w1, x0)), ones);
    const Tape::Id logits = tape.matmul(w2, hidden);
    const Tape::Id loss = tape.softmax_cross_entropy(logits, labels);
    if (!std::isfinite(tape.value(loss)(0, 0)))
      throw NumericalError("train_bijection: loss diverged at step " + std::to_string(step));
    tape.backward(loss);
    apply_sgd_step(flow, tape, params, config.lr);
  }
}

ConnectionPath connect_with_flow(const WeightVector& a, const WeightVector& b,
                                 std::shared_ptr<const CouplingFlow> flow) {
  ConnectionPath path = nu_connect(a, b, std::move(flow));
  path.method = "rnvp";
  return path;
}

}  // namespace mc
