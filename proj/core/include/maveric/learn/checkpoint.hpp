#pragma once

#include <string>

#include "maveric/learn/network.hpp"

namespace maveric::learn {

/// Versioned JSON checkpoint: config, normalization, shape-annotated subnet
/// weights, and the embedding table sorted by persona id. No timestamps and
/// sorted keys, so save -> load -> save is byte-identical.
void save_checkpoint(const std::string& path, const ModelParams& params);

ModelParams load_checkpoint(const std::string& path);

}  // namespace maveric::learn
