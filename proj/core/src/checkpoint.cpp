#include "modeconnect/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "modeconnect/errors.hpp"

namespace mc {

namespace {

void write_double(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

void save_checkpoint(const WeightVector& w, const std::string& path) {
  const MlpSpec spec = w.derive_spec();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot open " + path + " for writing");
  out << "{\"format_version\":1,\"layer_sizes\":[";
  for (std::size_t i = 0; i < spec.layer_sizes.size(); ++i) {
    if (i) out << ',';
    out << spec.layer_sizes[i];
  }
  out << "],\"layers\":[";
  for (int k = 1; k <= w.num_layers(); ++k) {
    if (k > 1) out << ',';
    const Matrix& m = w.layer(k);
    out << '[';
    for (int i = 0; i < m.rows(); ++i) {
      if (i) out << ',';
      out << '[';
      for (int j = 0; j < m.cols(); ++j) {
        if (j) out << ',';
        write_double(out, m(i, j));
      }
      out << ']';
    }
    out << ']';
  }
  out << "]}\n";
  if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

WeightVector load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("load_checkpoint: " + std::string(e.what()), static_cast<long long>(e.byte));
  }
  try {
    if (doc.at("format_version").get<int>() != 1)
      throw ParseError("load_checkpoint: unsupported format_version in " + path);
    const auto sizes = doc.at("layer_sizes").get<std::vector<int>>();
    const auto& layers = doc.at("layers");
    if (layers.size() + 1 != sizes.size())
      throw ParseError("load_checkpoint: layer count does not match layer_sizes");
    WeightVector w;
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const int rows = sizes[k + 1], cols = sizes[k] + 1;
      const auto& lj = layers[k];
      if (static_cast<int>(lj.size()) != rows)
        throw ParseError("load_checkpoint: layer " + std::to_string(k + 1) + " row count mismatch");
      Matrix m(rows, cols);
      for (int i = 0; i < rows; ++i) {
        const auto& row = lj[static_cast<std::size_t>(i)];
        if (static_cast<int>(row.size()) != cols)
          throw ParseError("load_checkpoint: layer " + std::to_string(k + 1) + " column count mismatch");
        for (int j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      }
      w.layers.push_back(std::move(m));
    }
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("load_checkpoint: " + std::string(e.what()));
  }
}

}  // namespace mc
