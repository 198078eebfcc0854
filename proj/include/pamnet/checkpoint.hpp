#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pamnet/model.hpp"

namespace pamnet {

/// Binary layout (all integers little-endian):
///
///   "PAMNCKPT"            8-byte magic
///   u32 version           kCheckpointVersion
///   u32 n, n bytes        model config as key=value text
///   u64 seed, u32 best_epoch
///   u32 tensor count, then per tensor:
///     u32 n, n bytes name; u32 rank; u32 dims[rank]; f32 payload, row-major
///
/// Only parameters active under the embedded config are stored.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::uint32_t best_epoch = 0;
};

struct Checkpoint {
  ModelConfig config;
  ModelParams<float> params;
  CheckpointMeta meta;
};

std::vector<std::uint8_t> encode_checkpoint(const ModelParams<float>& params, const ModelConfig& config,
                                            const CheckpointMeta& meta);
/// Throws FormatError (with byte offset) on corrupt or truncated input and
/// VersionError on a version mismatch.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params, const ModelConfig& config,
                     const CheckpointMeta& meta = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pamnet
