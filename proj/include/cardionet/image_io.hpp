#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace cardionet {

/// Interleaved 8-bit RGB pixels, row-major.
struct Rgb8Image {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3
};

inline constexpr char kRawMagic[4] = {'R', '9', '6', 'A'};
inline constexpr std::size_t kPatchSize = 96;

/// Decodes an 8-bit RGB PNG or an R96A raw file, chosen by magic bytes.
/// Throws DataError (undecodable, wrong channel layout) with the path.
Rgb8Image read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Rgb8Image& img);
/// R96A: 4 magic bytes then 96*96*3 bytes; the image must be 96x96.
void write_raw(const std::filesystem::path& path, const Rgb8Image& img);

}  // namespace cardionet
