#include "cardionet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cardionet/data.hpp"

namespace cardionet {

Rgb8Image synthetic_texture(TextureClass cls, Rng rng) {
  constexpr std::size_t n = kPatchSize;
  constexpr int kWaves = 4;
  const double f_lo = cls == TextureClass::Smooth ? 1.0 : 10.0;
  const double f_hi = cls == TextureClass::Smooth ? 3.0 : 20.0;
  struct Wave {
    double fy, fx, phase, amp;
  };
  std::vector<Wave> waves;
  for (int k = 0; k < kWaves; ++k) {
    const double f = rng.uniform(f_lo, f_hi);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    waves.push_back({f * std::sin(theta), f * std::cos(theta), rng.uniform(0.0, 2 * std::numbers::pi),
                     rng.uniform(0.5, 1.0)});
  }
  double amp_sum = 0.0;
  for (const auto& w : waves) amp_sum += w.amp;
  // Pink/purple H&E-like base colour and a per-channel response to the pattern.
  const double base[3] = {rng.uniform(170, 215), rng.uniform(110, 160), rng.uniform(150, 200)};
  const double gain[3] = {rng.uniform(30, 50), rng.uniform(30, 50), rng.uniform(20, 40)};

  Rgb8Image img;
  img.width = img.height = n;
  img.pixels.resize(n * n * 3);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      double p = 0.0;
      for (const auto& w : waves)
        p += w.amp * std::sin(2 * std::numbers::pi * (w.fy * y + w.fx * x) / static_cast<double>(n) + w.phase);
      p /= amp_sum;
      for (int c = 0; c < 3; ++c) {
        const double v = base[c] + gain[c] * p + rng.uniform(-6.0, 6.0);
        img.pixels[(y * n + x) * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  return img;
}

std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec) {
  std::filesystem::create_directories(dir);
  const Rng root(spec.seed);
  std::vector<ManifestEntry> entries;
  std::size_t a = 0, b = 0;
  while (a < spec.smooth_count || b < spec.high_frequency_count) {
    const bool take_b = b < spec.high_frequency_count && (a >= spec.smooth_count || b <= a);
    const TextureClass cls = take_b ? TextureClass::HighFrequency : TextureClass::Smooth;
    const std::size_t idx = take_b ? b++ : a++;
    const std::string stem = (take_b ? "hf_" : "smooth_") + std::to_string(idx);
    const std::string name = stem + (spec.raw_format ? ".r96a" : ".png");
    const Rgb8Image img = synthetic_texture(cls, root.substream(take_b ? "hf" : "smooth", {idx}));
    if (spec.raw_format)
      write_raw(dir / name, img);
    else
      write_png(dir / name, img);
    entries.push_back({name, take_b ? 1 : 0});
  }
  const auto manifest = dir / "manifest.csv";
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace cardionet
