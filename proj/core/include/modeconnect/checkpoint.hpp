#pragma once

#include <string>

#include "modeconnect/mlp.hpp"

namespace mc {

/// Writes a checkpoint JSON document:
///   {"format_version": 1, "layer_sizes": [...], "layers": [[[...]]]}
/// Weights are printed with 17 significant digits so that loading
/// reproduces them bit-exactly.
void save_checkpoint(const WeightVector& w, const std::string& path);

/// Loads a checkpoint written by save_checkpoint. Malformed documents
/// raise ParseError with the byte offset reported by the JSON parser.
WeightVector load_checkpoint(const std::string& path);

}  // namespace mc
