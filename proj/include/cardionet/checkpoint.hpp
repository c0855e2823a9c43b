#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cardionet/model.hpp"
#include "cardionet/optim.hpp"

namespace cardionet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams<float> params;  // params.config is the model config snapshot
  std::optional<AdamState<float>> adam;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

// Binary layout (little-endian):
//   "CSQ1" | u32 version | u32 len, config text | u32 tensor count |
//   per tensor: u32 name len, name, u32 rank, u32 dims[rank], u8 dtype (1 = f32), values |
//   optional: u32 count, tensors named adam/m/<path> and adam/v/<path>, u64 step
// The config text is ModelConfig::to_text() plus checkpoint.seed / checkpoint.step.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on bad magic, unsupported version, truncation, trailing
/// bytes, or a tensor table that does not match the embedded config.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cardionet
