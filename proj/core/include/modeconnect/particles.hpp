#pragma once

#include <vector>

#include "modeconnect/matrix.hpp"
#include "modeconnect/mlp.hpp"

namespace mc {

/// State of one hidden neuron: bias, incoming weights (a row of W_k
/// without its bias column), outgoing weights (a column of W_{k+1}). Its
/// dimension is D = 1 + fan_in + fan_out.
struct Particle {
  double bias = 0.0;
  std::vector<double> in_w;
  std::vector<double> out_w;

  int dim() const { return 1 + static_cast<int>(in_w.size()) + static_cast<int>(out_w.size()); }
};

/// Extracts the particles of hidden layer k (1 <= k <= L-1). Particle i
/// holds the bias of neuron i in layer k, row i of W_k, and column i of
/// W_{k+1}. The bias column of W_{k+1} is not part of any particle.
std::vector<Particle> to_particles(const WeightVector& w, int hidden_layer);

/// Writes particles back into a copy of `tmpl` at hidden layer k;
/// exact inverse of to_particles. Throws on an empty list or dimension
/// mismatch.
WeightVector from_particles(const std::vector<Particle>& particles, const WeightVector& tmpl, int hidden_layer);

/// Particle cloud as an n x D matrix with row layout [bias | in_w | out_w].
Matrix particles_to_matrix(const std::vector<Particle>& particles);
std::vector<Particle> matrix_to_particles(const Matrix& m, int fan_in, int fan_out);

/// Particle matrix of hidden layer k, equivalent to
/// particles_to_matrix(to_particles(w, k)) but without the intermediate
/// structs.
Matrix particle_matrix(const WeightVector& w, int hidden_layer);
/// Inverse of particle_matrix; leaves the bias column of layer k+1 as in
/// `tmpl`.
WeightVector weights_from_particle_matrix(const Matrix& m, const WeightVector& tmpl, int hidden_layer);

}  // namespace mc
