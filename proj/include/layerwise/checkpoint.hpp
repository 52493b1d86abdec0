#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "layerwise/nn.hpp"

namespace lw {

/// Checkpoint container, version 1 (all integers little-endian):
///
///   bytes 0..7   magic "LWCKPT\0\0"
///   u32          format version (1)
///   u32          header length H
///   H bytes      UTF-8 JSON header: input_shape, per-layer kind,
///                activation, pool size, weight and bias shapes
///   payload      for each layer in order: weights then bias as IEEE-754
///                binary64, row-major
///   u64          FNV-1a hash of the payload bytes
///
/// Encoding is a pure function of the network, so equal networks produce
/// byte-identical files.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Network& net);
Network decode_checkpoint(const std::string& bytes);

/// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace lw
