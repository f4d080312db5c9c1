#include "modeconnect/synthetic.hpp"

#include <cmath>

#include "modeconnect/errors.hpp"
#include "modeconnect/rng.hpp"

namespace mc {

void SyntheticSpec::validate() const {
  if (classes < 2 || dim < 1 || samples_per_class < 1 || cluster_std <= 0.0)
    throw InvalidArgument("SyntheticSpec: classes >= 2, dim >= 1, samples_per_class >= 1, cluster_std > 0 required");
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  const double radius = 4.0 * spec.cluster_std;
  Matrix centers(spec.classes, spec.dim);
  for (int c = 0; c < spec.classes; ++c) {
    double norm = 0.0;
    // Uniform direction via a normalized Gaussian draw; redraw the
    // (measure-zero) degenerate case.
    do {
      norm = 0.0;
      for (int j = 0; j < spec.dim; ++j) {
        centers(c, j) = rng.normal();
        norm += centers(c, j) * centers(c, j);
      }
      norm = std::sqrt(norm);
    } while (norm == 0.0);
    for (int j = 0; j < spec.dim; ++j) centers(c, j) *= radius / norm;
  }

  const int n = spec.classes * spec.samples_per_class;
  Dataset data;
  data.classes = spec.classes;
  data.features = Matrix(spec.dim, n);
  data.labels.resize(static_cast<std::size_t>(n));
  int q = 0;
  for (int c = 0; c < spec.classes; ++c) {
    for (int s = 0; s < spec.samples_per_class; ++s, ++q) {
      for (int j = 0; j < spec.dim; ++j) data.features(j, q) = centers(c, j) + rng.normal(0.0, spec.cluster_std);
      data.labels[static_cast<std::size_t>(q)] = c;
    }
  }
  return data;
}

}  // namespace mc
