#include "modeconnect/direct.hpp"

#include <cmath>

#include "modeconnect/errors.hpp"

namespace mc {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

void require_same_arch(const WeightVector& a, const WeightVector& b, const char* op) {
  if (!a.same_architecture(b)) throw InvalidArgument(std::string(op) + ": endpoint architectures differ");
}

void require_one_hidden(const WeightVector& w, const char* op) {
  if (w.num_layers() != 2)
    throw InvalidArgument(std::string(op) + ": needs a one-hidden network, got " + std::to_string(w.num_layers()) +
                          " layers");
}

// Linear interpolation of the output-layer bias column, which is not
// part of the particle state.
std::vector<double> lerp_bias_col(const Matrix& wa, const Matrix& wb, double t) {
  std::vector<double> out(static_cast<std::size_t>(wa.rows()));
  const int c = wa.cols() - 1;
  for (int i = 0; i < wa.rows(); ++i) out[static_cast<std::size_t>(i)] = (1.0 - t) * wa(i, c) + t * wb(i, c);
  return out;
}

WeightVector assemble_one_hidden(const Matrix& particles, const WeightVector& tmpl, const WeightVector& a,
                                 const WeightVector& b, double t) {
  WeightVector w = weights_from_particle_matrix(particles, tmpl, 1);
  const std::vector<double> bias = lerp_bias_col(a.layer(2), b.layer(2), t);
  const int c = w.layer(2).cols() - 1;
  for (int i = 0; i < w.layer(2).rows(); ++i) w.layer(2)(i, c) = bias[static_cast<std::size_t>(i)];
  return w;
}

}  // namespace

CenterEstimate CenterEstimate::zero(int dim) {
  return {std::vector<double>(static_cast<std::size_t>(dim), 0.0), CenterSource::Zero};
}

CenterEstimate estimate_center(std::span<const Matrix> particle_sets, CenterSource source) {
  if (particle_sets.empty()) throw InvalidArgument("estimate_center: no particle sets");
  const int dim = particle_sets.front().cols();
  std::vector<double> mu(static_cast<std::size_t>(dim), 0.0);
  long count = 0;
  for (const Matrix& set : particle_sets) {
    if (set.cols() != dim) throw InvalidArgument("estimate_center: particle dimension mismatch");
    for (int i = 0; i < set.rows(); ++i)
      for (int j = 0; j < dim; ++j) mu[static_cast<std::size_t>(j)] += set(i, j);
    count += set.rows();
  }
  if (count == 0) throw InvalidArgument("estimate_center: no particles");
  for (double& v : mu) v /= static_cast<double>(count);
  return {std::move(mu), source};
}

Matrix linear_mix_rows(const Matrix& x, const Matrix& y, double t) {
  if (!x.same_shape(y)) throw InvalidArgument("linear_mix_rows: shape mismatch");
  Matrix out(x.rows(), x.cols());
  const double u = 1.0 - t;
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = u * x.data()[i] + t * y.data()[i];
  return out;
}

Matrix arc_mix_rows(const Matrix& x, const Matrix& y, std::span<const double> mu, double t) {
  if (!x.same_shape(y)) throw InvalidArgument("arc_mix_rows: shape mismatch");
  if (static_cast<int>(mu.size()) != x.cols()) throw InvalidArgument("arc_mix_rows: center dimension mismatch");
  const double c = std::cos(kHalfPi * t);
  const double s = std::sin(kHalfPi * t);
  Matrix out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) {
      const double m = mu[static_cast<std::size_t>(j)];
      out(i, j) = m + c * (x(i, j) - m) + s * (y(i, j) - m);
    }
  return out;
}

ConnectionPath linear_connect(const WeightVector& a, const WeightVector& b) {
  require_same_arch(a, b, "linear_connect");
  auto pa = std::make_shared<const WeightVector>(a);
  auto pb = std::make_shared<const WeightVector>(b);
  std::vector<int> touched(static_cast<std::size_t>(a.num_layers()));
  for (int k = 0; k < a.num_layers(); ++k) touched[static_cast<std::size_t>(k)] = k + 1;
  PathLeg leg = PathLeg::closed_form("linear", touched, [pa, pb](double t) {
    WeightVector out = *pa;
    for (std::size_t k = 0; k < out.layers.size(); ++k)
      out.layers[k] = linear_mix_rows(pa->layers[k], pb->layers[k], t);
    return out;
  });
  ConnectionPath path;
  path.method = "linear";
  path.legs.push_back(std::move(leg));
  path.theta_a = pa;
  path.theta_b = pb;
  return path;
}

ConnectionPath arc_connect_one_hidden(const WeightVector& a, const WeightVector& b, const CenterEstimate& center) {
  require_same_arch(a, b, "arc_connect");
  require_one_hidden(a, "arc_connect_one_hidden");
  auto pa = std::make_shared<const WeightVector>(a);
  auto pb = std::make_shared<const WeightVector>(b);
  auto mu = std::make_shared<const std::vector<double>>(center.mu);
  const Matrix particles_a = particle_matrix(a, 1);
  if (static_cast<int>(mu->size()) != particles_a.cols())
    throw InvalidArgument("arc_connect: center dimension " + std::to_string(mu->size()) + " != particle dimension " +
                          std::to_string(particles_a.cols()));
  auto shared_pa = std::make_shared<const Matrix>(particles_a);
  auto shared_pb = std::make_shared<const Matrix>(particle_matrix(b, 1));

  PathLeg leg = PathLeg::forced_endpoints("arc", {1, 2}, a, b, [pa, pb, mu, shared_pa, shared_pb](double t) {
    const Matrix mixed = arc_mix_rows(*shared_pa, *shared_pb, *mu, t);
    return assemble_one_hidden(mixed, *pa, *pa, *pb, t);
  });
  ConnectionPath path;
  path.method = "arc";
  path.legs.push_back(std::move(leg));
  path.theta_a = pa;
  path.theta_b = pb;
  return path;
}

ConnectionPath arc_connect_rows(const WeightVector& a, const WeightVector& b) {
  require_same_arch(a, b, "arc_connect_rows");
  auto pa = std::make_shared<const WeightVector>(a);
  auto pb = std::make_shared<const WeightVector>(b);
  // Per-layer center: mean over the union of both endpoints' rows.
  auto centers = std::make_shared<std::vector<std::vector<double>>>();
  for (int k = 1; k <= a.num_layers(); ++k) {
    const Matrix sets[2] = {a.layer(k), b.layer(k)};
    centers->push_back(estimate_center(sets).mu);
  }
  std::vector<int> touched(static_cast<std::size_t>(a.num_layers()));
  for (int k = 0; k < a.num_layers(); ++k) touched[static_cast<std::size_t>(k)] = k + 1;

  PathLeg leg = PathLeg::forced_endpoints("arc-rows", touched, a, b, [pa, pb, centers](double t) {
    WeightVector out = *pa;
    for (std::size_t k = 0; k < out.layers.size(); ++k)
      out.layers[k] = arc_mix_rows(pa->layers[k], pb->layers[k], (*centers)[k], t);
    return out;
  });
  ConnectionPath path;
  path.method = "arc";
  path.legs.push_back(std::move(leg));
  path.theta_a = pa;
  path.theta_b = pb;
  return path;
}

ConnectionPath arc_connect(const WeightVector& a, const WeightVector& b) {
  require_same_arch(a, b, "arc_connect");
  if (a.num_layers() == 2) {
    const Matrix sets[2] = {particle_matrix(a, 1), particle_matrix(b, 1)};
    return arc_connect_one_hidden(a, b, estimate_center(sets));
  }
  return arc_connect_rows(a, b);
}

Matrix ShiftMap::forward(const Matrix& x) const {
  Matrix out = x;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) -= mu_[static_cast<std::size_t>(j)];
  return out;
}

Matrix ShiftMap::inverse(const Matrix& y) const {
  Matrix out = y;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += mu_[static_cast<std::size_t>(j)];
  return out;
}

ConnectionPath nu_connect(const WeightVector& a, const WeightVector& b, std::shared_ptr<const NuMap> nu) {
  require_same_arch(a, b, "nu_connect");
  require_one_hidden(a, "nu_connect");
  const Matrix particles_a = particle_matrix(a, 1);
  if (nu->dim() != particles_a.cols())
    throw InvalidArgument("nu_connect: map dimension " + std::to_string(nu->dim()) + " != particle dimension " +
                          std::to_string(particles_a.cols()));
  auto pa = std::make_shared<const WeightVector>(a);
  auto pb = std::make_shared<const WeightVector>(b);
  // The transformed endpoints are fixed by the formula; compute them once.
  auto za = std::make_shared<const Matrix>(nu->forward(particles_a));
  auto zb = std::make_shared<const Matrix>(nu->forward(particle_matrix(b, 1)));
  if (!all_finite(*za) || !all_finite(*zb)) throw NumericalError("nu_connect: nu produced non-finite values");

  PathLeg leg = PathLeg::forced_endpoints("nu", {1, 2}, a, b, [pa, pb, za, zb, nu](double t) {
    const double c = std::cos(kHalfPi * t);
    const double s = std::sin(kHalfPi * t);
    Matrix mixed(za->rows(), za->cols());
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed.data()[i] = c * za->data()[i] + s * zb->data()[i];
    const Matrix particles = nu->inverse(mixed);
    if (!all_finite(particles)) throw NumericalError("nu_connect: nu inverse produced non-finite values");
    return assemble_one_hidden(particles, *pa, *pa, *pb, t);
  });
  ConnectionPath path;
  path.method = "nu";
  path.legs.push_back(std::move(leg));
  path.theta_a = pa;
  path.theta_b = pb;
  return path;
}

}  // namespace mc
