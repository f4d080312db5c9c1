#include "modeconnect/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "modeconnect/errors.hpp"
#include "modeconnect/svd.hpp"

namespace mc {

namespace {

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
  if (rows == 0) return {};
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  return m;
}

}  // namespace

WaEnsemble build_wa_ensemble(const std::vector<WeightVector>& models, int split_from_last, const Matrix& features,
                             double rcond, int backbone_index) {
  if (models.empty()) throw InvalidArgument("build_wa_ensemble: no models");
  const MlpSpec spec = models.front().derive_spec();
  for (const WeightVector& m : models)
    if (!m.same_architecture(models.front()))
      throw InvalidArgument("build_wa_ensemble: member architectures differ");
  const int layers = spec.layers();
  if (split_from_last < 1 || split_from_last > layers)
    throw InvalidArgument("build_wa_ensemble: split " + std::to_string(split_from_last) + " out of range [1, " +
                          std::to_string(layers) + "]");
  if (backbone_index < 0 || backbone_index >= static_cast<int>(models.size()))
    throw InvalidArgument("build_wa_ensemble: backbone index out of range");

  WaEnsemble e;
  e.spec_ = spec;
  e.split_from_last_ = split_from_last;
  e.adjusted_layer_ = layers - split_from_last + 1;
  e.backbone_index_ = backbone_index;
  e.counter_ = std::make_shared<std::atomic<long>>(0);
  const int k = e.adjusted_layer_;

  const WeightVector& backbone_model = models[static_cast<std::size_t>(backbone_index)];
  for (int j = 1; j < k; ++j) e.backbone_.push_back(backbone_model.layer(j));

  const Matrix f1 = features_at_layer(spec, backbone_model, features, k - 1);
  const Matrix f1_pinv = pseudo_inverse(f1, rcond);
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (static_cast<int>(m) == backbone_index) {
      // The backbone member already operates on its own features; its
      // weights pass through unadjusted.
      e.adjusted_next_.push_back(models[m].layer(k));
    } else {
      const Matrix fk = features_at_layer(spec, models[m], features, k - 1);
      e.adjusted_next_.push_back(matmul(matmul(models[m].layer(k), fk), f1_pinv));
    }
    std::vector<Matrix> head;
    for (int j = k + 1; j <= layers; ++j) head.push_back(models[m].layer(j));
    e.heads_.push_back(std::move(head));
  }
  return e;
}

std::vector<Matrix> WaEnsemble::member_logits(const Matrix& features) const {
  if (adjusted_next_.empty()) throw InvalidArgument("WaEnsemble: empty ensemble");
  if (features.rows() != spec_.input_dim())
    throw InvalidArgument("WaEnsemble: features have " + std::to_string(features.rows()) + " rows, expected " +
                          std::to_string(spec_.input_dim()));
  // Shared backbone forward, once per batch.
  Matrix x = append_ones_row(features);
  for (const Matrix& w : backbone_) {
    Matrix z = matmul(w, x);
    relu_inplace(z);
    x = append_ones_row(z);
  }
  if (counter_) counter_->fetch_add(1);

  std::vector<Matrix> logits;
  logits.reserve(adjusted_next_.size());
  const int layers = spec_.layers();
  for (std::size_t m = 0; m < adjusted_next_.size(); ++m) {
    Matrix z = matmul(adjusted_next_[m], x);
    for (int j = adjusted_layer_ + 1; j <= layers; ++j) {
      relu_inplace(z);
      z = matmul(heads_[m][static_cast<std::size_t>(j - adjusted_layer_) - 1], append_ones_row(z));
    }
    logits.push_back(std::move(z));
  }
  return logits;
}

Matrix WaEnsemble::predict(const Matrix& features) const {
  const std::vector<Matrix> logits = member_logits(features);
  Matrix mean = logits.front();
  for (std::size_t m = 1; m < logits.size(); ++m)
    for (std::size_t i = 0; i < mean.size(); ++i) mean.data()[i] += logits[m].data()[i];
  const double inv = 1.0 / static_cast<double>(logits.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean.data()[i] *= inv;
  return mean;
}

int WaEnsemble::per_member_layer_count() const { return spec_.layers() - adjusted_layer_ + 1; }

Matrix softmax_columns(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (int q = 0; q < logits.cols(); ++q) {
    double zmax = logits(0, q);
    for (int c = 1; c < logits.rows(); ++c) zmax = std::max(zmax, logits(c, q));
    double denom = 0.0;
    for (int c = 0; c < logits.rows(); ++c) denom += std::exp(logits(c, q) - zmax);
    for (int c = 0; c < logits.rows(); ++c) p(c, q) = std::exp(logits(c, q) - zmax) / denom;
  }
  return p;
}

Matrix independent_ensemble_probs(const std::vector<WeightVector>& models, const Matrix& features) {
  if (models.empty()) throw InvalidArgument("independent_ensemble_probs: no models");
  const MlpSpec spec = models.front().derive_spec();
  Matrix mean;
  for (const WeightVector& m : models) {
    Matrix p = softmax_columns(forward(spec, m, features));
    if (mean.empty())
      mean = std::move(p);
    else
      for (std::size_t i = 0; i < mean.size(); ++i) mean.data()[i] += p.data()[i];
  }
  const double inv = 1.0 / static_cast<double>(models.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean.data()[i] *= inv;
  return mean;
}

void WaEnsemble::save(const std::string& path) const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["layer_sizes"] = spec_.layer_sizes;
  j["split_from_last"] = split_from_last_;
  j["backbone_index"] = backbone_index_;
  nlohmann::json backbone = nlohmann::json::array();
  for (const Matrix& m : backbone_) backbone.push_back(matrix_to_json(m));
  j["backbone"] = std::move(backbone);
  nlohmann::json adjusted = nlohmann::json::array();
  for (const Matrix& m : adjusted_next_) adjusted.push_back(matrix_to_json(m));
  j["adjusted_next"] = std::move(adjusted);
  nlohmann::json heads = nlohmann::json::array();
  for (const auto& head : heads_) {
    nlohmann::json h = nlohmann::json::array();
    for (const Matrix& m : head) h.push_back(matrix_to_json(m));
    heads.push_back(std::move(h));
  }
  j["heads"] = std::move(heads);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("WaEnsemble::save: cannot open " + path);
  out << j.dump();
  if (!out) throw IoError("WaEnsemble::save: write failed for " + path);
}

WaEnsemble WaEnsemble::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("WaEnsemble::load: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("WaEnsemble::load: " + std::string(e.what()), static_cast<long long>(e.byte));
  }
  try {
    WaEnsemble e;
    e.spec_.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    e.split_from_last_ = j.at("split_from_last").get<int>();
    e.backbone_index_ = j.at("backbone_index").get<int>();
    e.adjusted_layer_ = e.spec_.layers() - e.split_from_last_ + 1;
    e.counter_ = std::make_shared<std::atomic<long>>(0);
    for (const auto& m : j.at("backbone")) e.backbone_.push_back(matrix_from_json(m));
    for (const auto& m : j.at("adjusted_next")) e.adjusted_next_.push_back(matrix_from_json(m));
    for (const auto& h : j.at("heads")) {
      std::vector<Matrix> head;
      for (const auto& m : h) head.push_back(matrix_from_json(m));
      e.heads_.push_back(std::move(head));
    }
    return e;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("WaEnsemble::load: " + std::string(e.what()));
  }
}

}  // namespace mc
