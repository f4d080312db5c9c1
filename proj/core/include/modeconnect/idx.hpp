#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modeconnect/dataset.hpp"

namespace mc {

/// Loads an MNIST-style IDX pair: big-endian ubyte images (magic
/// 0x00000803) and labels (magic 0x00000801). Pixels are scaled to
/// [0, 1] and flattened to rows*cols features per sample (column-wise in
/// the result). Image and label counts must agree. Malformed input
/// raises ParseError with the offending byte offset.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Writers for IDX fixtures (and for regenerating test data). Each image
/// is rows*cols bytes.
void write_idx_images(const std::string& path, const std::vector<std::vector<std::uint8_t>>& images, int rows,
                      int cols);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

}  // namespace mc
