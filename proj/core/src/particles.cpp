#include "modeconnect/particles.hpp"

#include "modeconnect/errors.hpp"

namespace mc {

namespace {

void check_hidden_layer(const WeightVector& w, int k) {
  if (k < 1 || k > w.num_layers() - 1)
    throw InvalidArgument("hidden layer " + std::to_string(k) + " out of range [1, " +
                          std::to_string(w.num_layers() - 1) + "]");
}

}  // namespace

std::vector<Particle> to_particles(const WeightVector& w, int hidden_layer) {
  check_hidden_layer(w, hidden_layer);
  const Matrix& wk = w.layer(hidden_layer);
  const Matrix& wn = w.layer(hidden_layer + 1);
  const int n = wk.rows(), fan_in = wk.cols() - 1, fan_out = wn.rows();
  std::vector<Particle> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Particle& p = out[static_cast<std::size_t>(i)];
    p.bias = wk(i, fan_in);
    p.in_w.resize(static_cast<std::size_t>(fan_in));
    for (int j = 0; j < fan_in; ++j) p.in_w[static_cast<std::size_t>(j)] = wk(i, j);
    p.out_w.resize(static_cast<std::size_t>(fan_out));
    for (int j = 0; j < fan_out; ++j) p.out_w[static_cast<std::size_t>(j)] = wn(j, i);
  }
  return out;
}

WeightVector from_particles(const std::vector<Particle>& particles, const WeightVector& tmpl, int hidden_layer) {
  check_hidden_layer(tmpl, hidden_layer);
  if (particles.empty()) throw InvalidArgument("from_particles: empty particle list");
  const Matrix& wk = tmpl.layer(hidden_layer);
  const Matrix& wn = tmpl.layer(hidden_layer + 1);
  const int n = wk.rows(), fan_in = wk.cols() - 1, fan_out = wn.rows();
  if (static_cast<int>(particles.size()) != n)
    throw InvalidArgument("from_particles: " + std::to_string(particles.size()) + " particles for width " +
                          std::to_string(n));
  WeightVector out = tmpl;
  for (int i = 0; i < n; ++i) {
    const Particle& p = particles[static_cast<std::size_t>(i)];
    if (static_cast<int>(p.in_w.size()) != fan_in || static_cast<int>(p.out_w.size()) != fan_out)
      throw InvalidArgument("from_particles: particle " + std::to_string(i) + " has dimension " +
                            std::to_string(p.dim()) + ", expected " + std::to_string(1 + fan_in + fan_out));
    for (int j = 0; j < fan_in; ++j) out.layer(hidden_layer)(i, j) = p.in_w[static_cast<std::size_t>(j)];
    out.layer(hidden_layer)(i, fan_in) = p.bias;
    for (int j = 0; j < fan_out; ++j) out.layer(hidden_layer + 1)(j, i) = p.out_w[static_cast<std::size_t>(j)];
  }
  return out;
}

Matrix particles_to_matrix(const std::vector<Particle>& particles) {
  if (particles.empty()) throw InvalidArgument("particles_to_matrix: empty particle list");
  const int d = particles.front().dim();
  Matrix m(static_cast<int>(particles.size()), d);
  for (int i = 0; i < m.rows(); ++i) {
    const Particle& p = particles[static_cast<std::size_t>(i)];
    if (p.dim() != d) throw InvalidArgument("particles_to_matrix: inconsistent particle dimensions");
    int c = 0;
    m(i, c++) = p.bias;
    for (double v : p.in_w) m(i, c++) = v;
    for (double v : p.out_w) m(i, c++) = v;
  }
  return m;
}

std::vector<Particle> matrix_to_particles(const Matrix& m, int fan_in, int fan_out) {
  if (m.cols() != 1 + fan_in + fan_out)
    throw InvalidArgument("matrix_to_particles: " + std::to_string(m.cols()) + " columns, expected " +
                          std::to_string(1 + fan_in + fan_out));
  std::vector<Particle> out(static_cast<std::size_t>(m.rows()));
  for (int i = 0; i < m.rows(); ++i) {
    Particle& p = out[static_cast<std::size_t>(i)];
    p.bias = m(i, 0);
    p.in_w.assign(m.row(i).begin() + 1, m.row(i).begin() + 1 + fan_in);
    p.out_w.assign(m.row(i).begin() + 1 + fan_in, m.row(i).end());
  }
  return out;
}

Matrix particle_matrix(const WeightVector& w, int hidden_layer) {
  check_hidden_layer(w, hidden_layer);
  const Matrix& wk = w.layer(hidden_layer);
  const Matrix& wn = w.layer(hidden_layer + 1);
  const int n = wk.rows(), fan_in = wk.cols() - 1, fan_out = wn.rows();
  Matrix m(n, 1 + fan_in + fan_out);
  for (int i = 0; i < n; ++i) {
    m(i, 0) = wk(i, fan_in);
    for (int j = 0; j < fan_in; ++j) m(i, 1 + j) = wk(i, j);
    for (int j = 0; j < fan_out; ++j) m(i, 1 + fan_in + j) = wn(j, i);
  }
  return m;
}

WeightVector weights_from_particle_matrix(const Matrix& m, const WeightVector& tmpl, int hidden_layer) {
  check_hidden_layer(tmpl, hidden_layer);
  const int n = tmpl.layer(hidden_layer).rows();
  const int fan_in = tmpl.layer(hidden_layer).cols() - 1;
  const int fan_out = tmpl.layer(hidden_layer + 1).rows();
  if (m.rows() != n || m.cols() != 1 + fan_in + fan_out)
    throw InvalidArgument("weights_from_particle_matrix: got " + m.shape_str() + ", expected " + std::to_string(n) +
                          "x" + std::to_string(1 + fan_in + fan_out));
  WeightVector out = tmpl;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < fan_in; ++j) out.layer(hidden_layer)(i, j) = m(i, 1 + j);
    out.layer(hidden_layer)(i, fan_in) = m(i, 0);
    for (int j = 0; j < fan_out; ++j) out.layer(hidden_layer + 1)(j, i) = m(i, 1 + fan_in + j);
  }
  return out;
}

}  // namespace mc
