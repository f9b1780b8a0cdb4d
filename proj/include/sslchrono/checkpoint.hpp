#pragma once

#include <string>

#include "sslchrono/model.hpp"

// Single-file checkpoint: a text manifest (format version, model config, one
// line per parameter with its backbone/head tag, shape and byte offset)
// followed by a little-endian float32 payload guarded by an FNV-1a checksum.
// Load(save(p)) is a bitwise identity.

namespace sslchrono {

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ModelParams& params);

ModelParams load_checkpoint(const std::string& path);

uint64_t fnv1a(const void* bytes, size_t n, uint64_t seed = 1469598103934665603ULL);

}  // namespace sslchrono
