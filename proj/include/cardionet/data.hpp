#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cardionet/rng.hpp"
#include "cardionet/tensor.hpp"

namespace cardionet {

/// Label 1 = ischemic (positive class), 0 = non-ischemic.
struct ManifestEntry {
  std::string path;  // as written in the manifest
  int label = 0;
  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::filesystem::path base_dir;  // paths resolve relative to this
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& e) const { return base_dir / e.path; }
};

/// CSV with header exactly `path,label`; LF or CRLF. Errors name the row.
Manifest load_manifest(const std::filesystem::path& path);
/// Writes a manifest (atomically). Entry paths are written verbatim.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

struct Sample {
  Tensor<float> pixels;  // 96 x 96 x 3 in [-1, 1]
  int label = 0;
  std::string source_path;
};

/// v / 127.5 - 1 for an 8-bit channel value.
inline float normalize_pixel(std::uint8_t v) { return static_cast<float>(static_cast<double>(v) / 127.5 - 1.0); }

/// Decodes and normalizes a 96x96 RGB patch; any other size is rejected.
Tensor<float> load_image(const std::filesystem::path& path);
Sample load_sample(const Manifest& manifest, std::size_t index);

struct DatasetSplit {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle, first `train_count` entries to train. The stratified
/// variant shuffles each class separately and allocates train slots in
/// proportion to class size.
DatasetSplit split_dataset(const std::vector<ManifestEntry>& entries, std::size_t train_count, std::uint64_t seed,
                           bool stratified = false);
/// FNV-1a over the ordered train and test paths, as 16 hex digits.
std::string split_hash(const DatasetSplit& split);

struct AugmentationConfig {
  bool horizontal_flip = true;
  bool vertical_flip = true;
  std::vector<int> rotations = {90, 180, 270};  // right angles only
  double zoom_lo = 0.9;
  double zoom_hi = 1.1;
  /// Extra arbitrary-angle rotation drawn from [-max, max] degrees; 0 = off.
  double max_rotation_degrees = 0.0;

  static AugmentationConfig identity();
  void validate() const;
};

/// Random flips, right-angle rotation and zoom (bilinear resample, center
/// crop or zero pad back to the input size). `rng` should be the per-sample
/// substream (seed, "augment", sample_index, epoch).
Sample augment(const Sample& sample, const AugmentationConfig& cfg, Rng rng);

// Lossless transforms on square H x W x C images.
Tensor<float> rotate90(const Tensor<float>& img, int quarter_turns);
Tensor<float> flip_horizontal(const Tensor<float>& img);
Tensor<float> flip_vertical(const Tensor<float>& img);
/// Bilinear resample about the image center; zoom > 1 magnifies. Pixels that
/// map outside the source are 0.
Tensor<float> zoom_rotate(const Tensor<float>& img, double zoom, double degrees);

/// Index batches for one epoch: a seeded permutation of 0..n-1 cut into
/// batches of `batch_size`, the last one possibly shorter.
std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size, std::uint64_t shuffle_seed,
                                                 std::uint64_t epoch);

}  // namespace cardionet
