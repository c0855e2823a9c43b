#pragma once

#include <cstdint>
#include <filesystem>

#include "cardionet/image_io.hpp"
#include "cardionet/rng.hpp"

namespace cardionet {

enum class TextureClass {
  Smooth,        // low spatial frequency, written with label 0
  HighFrequency  // high spatial frequency, written with label 1
};

/// 96x96 stain-coloured texture: a sum of random oriented sinusoids whose
/// frequencies are 1-3 cycles per patch (Smooth) or 10-20 (HighFrequency),
/// plus mild pixel noise. Both classes share the same colour and amplitude
/// distributions, so only spatial frequency separates them.
Rgb8Image synthetic_texture(TextureClass cls, Rng rng);

struct SyntheticSpec {
  std::size_t smooth_count = 43;
  std::size_t high_frequency_count = 51;
  std::uint64_t seed = 7;
  bool raw_format = false;  // R96A instead of PNG
};

/// Writes images and `manifest.csv` into `dir` (created if needed) and
/// returns the manifest path. Entries interleave the two classes.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec);

}  // namespace cardionet
