#pragma once

#include <filesystem>
#include <string>

#include "posphase/model/transformer.hpp"

namespace posphase::model {

// key=value lines, one per ModelConfig field, in declaration order.
std::string serialize_config(const ModelConfig& config);
// Inverse of serialize_config; ConfigError names the offending key.
ModelConfig parse_config(const std::string& text);

// Binary checkpoint, little-endian:
//   "POSPHCKP" | u32 version (1) | u32 len + config text |
//   u32 count | count × { u32 len + name | u32 rank | rank × u64 dim |
//                         f32 data }
// Loading restores every parameter bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const Transformer& model);
Transformer load_checkpoint(const std::filesystem::path& path);

}  // namespace posphase::model
