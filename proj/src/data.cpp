#include "cardionet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "cardionet/errors.hpp"
#include "cardionet/fileio.hpp"
#include "cardionet/image_io.hpp"

namespace cardionet {

namespace fs = std::filesystem;

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t row = 0;
  std::set<std::string> seen;
  bool header = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      if (row == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
      if (line != "path,label")
        throw DataError("manifest '" + path.string() + "': header must be exactly 'path,label', got '" + line + "'");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0)
      throw DataError("manifest '" + path.string() + "' row " + std::to_string(row) + ": expected 'path,label'");
    ManifestEntry e;
    e.path = line.substr(0, comma);
    const std::string label = line.substr(comma + 1);
    if (label == "0") {
      e.label = 0;
    } else if (label == "1") {
      e.label = 1;
    } else {
      throw DataError("manifest '" + path.string() + "' row " + std::to_string(row) + ": label must be 0 or 1, got '" +
                      label + "'");
    }
    if (!seen.insert(e.path).second)
      throw DataError("manifest '" + path.string() + "' row " + std::to_string(row) + ": duplicate path '" + e.path +
                      "'");
    m.entries.push_back(std::move(e));
  }
  if (!header) throw DataError("manifest '" + path.string() + "' is empty (missing 'path,label' header)");
  return m;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::string text = "path,label\n";
  for (const auto& e : entries) text += e.path + ',' + std::to_string(e.label) + '\n';
  write_file_atomic(path, text);
}

Tensor<float> load_image(const fs::path& path) {
  const Rgb8Image img = read_image(path);
  if (img.width != kPatchSize || img.height != kPatchSize)
    throw DimensionError("image '" + path.string() + "' is " + std::to_string(img.width) + "x" +
                         std::to_string(img.height) + ", expected 96x96");
  Tensor<float> t(Shape{kPatchSize, kPatchSize, 3});
  for (std::size_t i = 0; i < t.numel(); ++i) t.values[i] = normalize_pixel(img.pixels[i]);
  return t;
}

Sample load_sample(const Manifest& manifest, std::size_t index) {
  const ManifestEntry& e = manifest.entries.at(index);
  return {load_image(manifest.resolve(e)), e.label, e.path};
}

DatasetSplit split_dataset(const std::vector<ManifestEntry>& entries, std::size_t train_count, std::uint64_t seed,
                           bool stratified) {
  if (train_count == 0 || train_count >= entries.size())
    throw ConfigError("train_count must be in [1, " + std::to_string(entries.size()) + "), got " +
                      std::to_string(train_count));
  DatasetSplit s;
  s.seed = seed;
  Rng rng = Rng(seed).substream("split");
  if (!stratified) {
    const auto perm = permutation(entries.size(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i) (i < train_count ? s.train : s.test).push_back(entries[perm[i]]);
    return s;
  }
  std::vector<ManifestEntry> by_class[2];
  for (const auto& e : entries) by_class[e.label].push_back(e);
  const std::size_t train1 = static_cast<std::size_t>(
      std::llround(static_cast<double>(train_count) * by_class[1].size() / static_cast<double>(entries.size())));
  const std::size_t quota[2] = {train_count - std::min(train1, train_count), std::min(train1, train_count)};
  for (int c = 0; c < 2; ++c) {
    Rng cr = rng.substream("class", {static_cast<std::uint64_t>(c)});
    const auto perm = permutation(by_class[c].size(), cr);
    for (std::size_t i = 0; i < perm.size(); ++i)
      (i < quota[c] ? s.train : s.test).push_back(by_class[c][perm[i]]);
  }
  return s;
}

std::string split_hash(const DatasetSplit& split) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
  };
  for (const auto& e : split.train) feed(e.path + "\n");
  feed("|\n");
  for (const auto& e : split.test) feed(e.path + "\n");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

AugmentationConfig AugmentationConfig::identity() {
  AugmentationConfig c;
  c.horizontal_flip = c.vertical_flip = false;
  c.rotations.clear();
  c.zoom_lo = c.zoom_hi = 1.0;
  c.max_rotation_degrees = 0.0;
  return c;
}

void AugmentationConfig::validate() const {
  if (!(zoom_lo > 0.0 && zoom_hi <= 2.0 && zoom_lo <= zoom_hi))
    throw ConfigError("zoom range must satisfy 0 < lo <= hi <= 2");
  for (int r : rotations)
    if (r != 90 && r != 180 && r != 270) throw ConfigError("rotations must be 90, 180 or 270 degrees");
  if (max_rotation_degrees < 0.0) throw ConfigError("max_rotation_degrees must be >= 0");
}

namespace {

void require_square(const Tensor<float>& img) {
  if (img.rank() != 3 || img.dim(0) != img.dim(1))
    throw DimensionError("expected a square H x W x C image, got " + shape_str(img.shape));
}

}  // namespace

Tensor<float> rotate90(const Tensor<float>& img, int quarter_turns) {
  require_square(img);
  const std::size_t n = img.dim(0), c = img.dim(2);
  const int k = ((quarter_turns % 4) + 4) % 4;
  Tensor<float> out = img;
  for (int r = 0; r < k; ++r) {
    Tensor<float> next(out.shape);
    // Clockwise: out[y][x] = in[n-1-x][y].
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x)
        std::copy_n(out.values.begin() + ((n - 1 - x) * n + y) * c, c, next.values.begin() + (y * n + x) * c);
    out = std::move(next);
  }
  return out;
}

Tensor<float> flip_horizontal(const Tensor<float>& img) {
  require_square(img);
  const std::size_t n = img.dim(0), c = img.dim(2);
  Tensor<float> out(img.shape);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x)
      std::copy_n(img.values.begin() + (y * n + (n - 1 - x)) * c, c, out.values.begin() + (y * n + x) * c);
  return out;
}

Tensor<float> flip_vertical(const Tensor<float>& img) {
  require_square(img);
  const std::size_t n = img.dim(0), c = img.dim(2);
  Tensor<float> out(img.shape);
  for (std::size_t y = 0; y < n; ++y)
    std::copy_n(img.values.begin() + (n - 1 - y) * n * c, n * c, out.values.begin() + y * n * c);
  return out;
}

Tensor<float> zoom_rotate(const Tensor<float>& img, double zoom, double degrees) {
  require_square(img);
  if (!(zoom > 0.0)) throw ConfigError("zoom factor must be positive");
  const std::size_t n = img.dim(0), c = img.dim(2);
  const double center = (static_cast<double>(n) - 1.0) / 2.0;
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  Tensor<float> out(img.shape);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double dy = (static_cast<double>(y) - center) / zoom;
      const double dx = (static_cast<double>(x) - center) / zoom;
      const double sy = center + cs * dy - sn * dx;
      const double sx = center + sn * dy + cs * dx;
      const double fy = std::floor(sy), fx = std::floor(sx);
      const double wy = sy - fy, wx = sx - fx;
      const long y0 = static_cast<long>(fy), x0 = static_cast<long>(fx);
      for (std::size_t ch = 0; ch < c; ++ch) {
        auto at = [&](long yy, long xx) -> double {
          if (yy < 0 || xx < 0 || yy >= static_cast<long>(n) || xx >= static_cast<long>(n)) return 0.0;
          return img.values[(static_cast<std::size_t>(yy) * n + static_cast<std::size_t>(xx)) * c + ch];
        };
        const double v = (1 - wy) * ((1 - wx) * at(y0, x0) + wx * at(y0, x0 + 1)) +
                         wy * ((1 - wx) * at(y0 + 1, x0) + wx * at(y0 + 1, x0 + 1));
        out.values[(y * n + x) * c + ch] = static_cast<float>(v);
      }
    }
  return out;
}

Sample augment(const Sample& sample, const AugmentationConfig& cfg, Rng rng) {
  cfg.validate();
  // Every draw happens unconditionally so enabling one transform never
  // shifts the randomness of another.
  const bool hflip = rng.bernoulli(0.5);
  const bool vflip = rng.bernoulli(0.5);
  const std::uint64_t rot_pick = rng.below(cfg.rotations.size() + 1);
  const double zoom = rng.uniform(cfg.zoom_lo, cfg.zoom_hi);
  const double angle = rng.uniform(-cfg.max_rotation_degrees, cfg.max_rotation_degrees);

  Sample out = sample;
  if (rot_pick > 0) out.pixels = rotate90(out.pixels, cfg.rotations[rot_pick - 1] / 90);
  if (cfg.horizontal_flip && hflip) out.pixels = flip_horizontal(out.pixels);
  if (cfg.vertical_flip && vflip) out.pixels = flip_vertical(out.pixels);
  const double z = cfg.zoom_lo == cfg.zoom_hi ? cfg.zoom_lo : zoom;
  const double a = cfg.max_rotation_degrees > 0.0 ? angle : 0.0;
  if (z != 1.0 || a != 0.0) out.pixels = zoom_rotate(out.pixels, z, a);
  return out;
}

std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size, std::uint64_t shuffle_seed,
                                                 std::uint64_t epoch) {
  if (n == 0) throw DataError("batch_iter: empty split");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  Rng rng = Rng(shuffle_seed).substream("batch", {epoch});
  const auto perm = permutation(n, rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += batch_size)
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(i),
                         perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  return batches;
}

}  // namespace cardionet
