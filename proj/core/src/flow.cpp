#include "modeconnect/flow.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "modeconnect/errors.hpp"

namespace mc {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void relu_inplace(Matrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.data()[i] < 0.0) m.data()[i] = 0.0;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows ? static_cast<int>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  return m;
}

}  // namespace

Matrix Subnet::apply(const Matrix& x) const {
  Matrix h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = add_row_broadcast(matmul(h, layers[l].w), layers[l].b);
    if (l + 1 < layers.size()) relu_inplace(h);
  }
  return h;
}

CouplingFlow CouplingFlow::identity_init(int dim, int coupling_layers, int hidden_width, Rng& rng) {
  if (dim < 2) throw InvalidArgument("CouplingFlow: dim must be >= 2");
  if (coupling_layers < 1 || hidden_width < 1)
    throw InvalidArgument("CouplingFlow: layer count and width must be positive");
  CouplingFlow flow;
  flow.dim_ = dim;
  flow.whiten_mean_.assign(static_cast<std::size_t>(dim), 0.0);
  flow.whiten_std_.assign(static_cast<std::size_t>(dim), 1.0);
  const int half = dim / 2;
  for (int l = 0; l < coupling_layers; ++l) {
    CouplingLayer layer;
    layer.mask_first_half = (l % 2 == 0);
    const int in = layer.mask_first_half ? half : dim - half;
    const int out = dim - in;
    for (Subnet* net : {&layer.s_net, &layer.t_net}) {
      DenseLayer l1{sample_gaussian(rng, in, hidden_width, 0.0, std::sqrt(2.0 / in)), Matrix(1, hidden_width)};
      DenseLayer l2{sample_gaussian(rng, hidden_width, hidden_width, 0.0, std::sqrt(2.0 / hidden_width)),
                    Matrix(1, hidden_width)};
      DenseLayer l3{Matrix(hidden_width, out), Matrix(1, out)};  // zero: the flow starts at identity
      net->layers = {std::move(l1), std::move(l2), std::move(l3)};
    }
    flow.layers_.push_back(std::move(layer));
  }
  return flow;
}

std::pair<int, int> CouplingFlow::masked_range(int layer) const {
  const int half = dim_ / 2;
  return layers_[static_cast<std::size_t>(layer)].mask_first_half ? std::pair<int, int>{0, half}
                                                                  : std::pair<int, int>{half, dim_};
}

std::pair<int, int> CouplingFlow::transformed_range(int layer) const {
  const int half = dim_ / 2;
  return layers_[static_cast<std::size_t>(layer)].mask_first_half ? std::pair<int, int>{half, dim_}
                                                                  : std::pair<int, int>{0, half};
}

Matrix CouplingFlow::whiten(const Matrix& x) const {
  Matrix z = x;
  for (int i = 0; i < z.rows(); ++i)
    for (int j = 0; j < z.cols(); ++j)
      z(i, j) = (z(i, j) - whiten_mean_[static_cast<std::size_t>(j)]) / whiten_std_[static_cast<std::size_t>(j)];
  return z;
}

Matrix CouplingFlow::unwhiten(const Matrix& z) const {
  Matrix x = z;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j)
      x(i, j) = x(i, j) * whiten_std_[static_cast<std::size_t>(j)] + whiten_mean_[static_cast<std::size_t>(j)];
  return x;
}

void CouplingFlow::fit_whitening(const Matrix& particles) {
  if (particles.cols() != dim_) throw InvalidArgument("fit_whitening: dimension mismatch");
  if (particles.rows() < 1) throw InvalidArgument("fit_whitening: no particles");
  const int n = particles.rows();
  for (int j = 0; j < dim_; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += particles(i, j);
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = particles(i, j) - mean;
      var += d * d;
    }
    var /= n;
    whiten_mean_[static_cast<std::size_t>(j)] = mean;
    whiten_std_[static_cast<std::size_t>(j)] = std::max(std::sqrt(var), 1e-8);
  }
}

std::pair<Matrix, std::vector<double>> CouplingFlow::forward_logdet(const Matrix& x) const {
  if (x.cols() != dim_) throw InvalidArgument("flow forward: input has " + std::to_string(x.cols()) +
                                              " columns, flow dimension is " + std::to_string(dim_));
  std::vector<double> logdet(static_cast<std::size_t>(x.rows()), 0.0);
  double whiten_term = 0.0;
  for (double s : whiten_std_) whiten_term -= std::log(s);
  for (double& v : logdet) v = whiten_term;

  Matrix y = whiten(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto [m0, m1] = masked_range(static_cast<int>(l));
    const auto [u0, u1] = transformed_range(static_cast<int>(l));
    const Matrix xm = slice_cols(y, m0, m1);
    Matrix s = layers_[l].s_net.apply(xm);
    for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = scale_bound_ * std::tanh(s.data()[i]);
    const Matrix t = layers_[l].t_net.apply(xm);
    for (int i = 0; i < y.rows(); ++i) {
      for (int j = u0; j < u1; ++j) {
        const double sv = s(i, j - u0);
        y(i, j) = y(i, j) * std::exp(sv) + t(i, j - u0);
        logdet[static_cast<std::size_t>(i)] += sv;
      }
      if (!std::isfinite(logdet[static_cast<std::size_t>(i)]))
        throw NumericalError("flow forward: non-finite values in coupling layer " + std::to_string(l));
    }
  }
  return {std::move(y), std::move(logdet)};
}

Matrix CouplingFlow::forward(const Matrix& x) const { return forward_logdet(x).first; }

Matrix CouplingFlow::inverse(const Matrix& y) const {
  if (y.cols() != dim_) throw InvalidArgument("flow inverse: input has " + std::to_string(y.cols()) +
                                              " columns, flow dimension is " + std::to_string(dim_));
  Matrix x = y;
  for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
    const auto [m0, m1] = masked_range(l);
    const auto [u0, u1] = transformed_range(l);
    const Matrix ym = slice_cols(x, m0, m1);
    Matrix s = layers_[static_cast<std::size_t>(l)].s_net.apply(ym);
    for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = scale_bound_ * std::tanh(s.data()[i]);
    const Matrix t = layers_[static_cast<std::size_t>(l)].t_net.apply(ym);
    for (int i = 0; i < x.rows(); ++i)
      for (int j = u0; j < u1; ++j) {
        x(i, j) = (x(i, j) - t(i, j - u0)) * std::exp(-s(i, j - u0));
        if (!std::isfinite(x(i, j)))
          throw NumericalError("flow inverse: non-finite values in coupling layer " + std::to_string(l));
      }
  }
  return unwhiten(x);
}

double CouplingFlow::nll(const Matrix& x) const {
  const auto [y, logdet] = forward_logdet(x);
  double total = 0.0;
  for (int i = 0; i < y.rows(); ++i) {
    double sq = 0.0;
    for (int j = 0; j < y.cols(); ++j) sq += y(i, j) * y(i, j);
    total += 0.5 * dim_ * kLog2Pi + 0.5 * sq - logdet[static_cast<std::size_t>(i)];
  }
  return total / y.rows();
}

void CouplingFlow::save(const std::string& path) const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["dim"] = dim_;
  j["scale_bound"] = scale_bound_;
  j["whitening"] = {{"mean", whiten_mean_}, {"std", whiten_std_}};
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    nlohmann::json layer;
    std::vector<int> mask(static_cast<std::size_t>(dim_), 0);
    const auto [m0, m1] = masked_range(static_cast<int>(l));
    for (int c = m0; c < m1; ++c) mask[static_cast<std::size_t>(c)] = 1;
    layer["mask"] = mask;
    for (const char* key : {"s_net", "t_net"}) {
      const Subnet& net = key[0] == 's' ? layers_[l].s_net : layers_[l].t_net;
      nlohmann::json dense = nlohmann::json::array();
      for (const DenseLayer& d : net.layers) dense.push_back({{"w", matrix_to_json(d.w)}, {"b", matrix_to_json(d.b)}});
      layer[key] = std::move(dense);
    }
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("CouplingFlow::save: cannot open " + path);
  out << j.dump();
  if (!out) throw IoError("CouplingFlow::save: write failed for " + path);
}

CouplingFlow CouplingFlow::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("CouplingFlow::load: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("CouplingFlow::load: " + std::string(e.what()), static_cast<long long>(e.byte));
  }
  try {
    CouplingFlow flow;
    flow.dim_ = j.at("dim").get<int>();
    flow.scale_bound_ = j.at("scale_bound").get<double>();
    flow.whiten_mean_ = j.at("whitening").at("mean").get<std::vector<double>>();
    flow.whiten_std_ = j.at("whitening").at("std").get<std::vector<double>>();
    const int half = flow.dim_ / 2;
    for (const auto& layer : j.at("layers")) {
      CouplingLayer cl;
      const auto mask = layer.at("mask").get<std::vector<int>>();
      if (static_cast<int>(mask.size()) != flow.dim_) throw ParseError("CouplingFlow::load: mask length mismatch");
      int ones_in_first_half = 0;
      for (int c = 0; c < half; ++c) ones_in_first_half += mask[static_cast<std::size_t>(c)];
      cl.mask_first_half = ones_in_first_half == half;
      for (const char* key : {"s_net", "t_net"}) {
        Subnet& net = key[0] == 's' ? cl.s_net : cl.t_net;
        for (const auto& d : layer.at(key))
          net.layers.push_back({matrix_from_json(d.at("w")), matrix_from_json(d.at("b"))});
      }
      flow.layers_.push_back(std::move(cl));
    }
    return flow;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("CouplingFlow::load: " + std::string(e.what()));
  }
}

}  // namespace mc
