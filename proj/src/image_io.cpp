#include "cardionet/image_io.hpp"

#include <png.h>

#include <cstring>

#include "cardionet/errors.hpp"
#include "cardionet/fileio.hpp"

namespace cardionet {

namespace {

Rgb8Image decode_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw DataError("cannot decode PNG '" + path.string() + "': " + img.message);
  const bool color = img.format & PNG_FORMAT_FLAG_COLOR;
  const bool alpha = img.format & PNG_FORMAT_FLAG_ALPHA;
  const bool linear = img.format & PNG_FORMAT_FLAG_LINEAR;
  if (!color || alpha || linear) {
    png_image_free(&img);
    throw DataError("image '" + path.string() + "' must be 8-bit RGB (3 channels without alpha)");
  }
  img.format = PNG_FORMAT_RGB;
  Rgb8Image out;
  out.width = img.width;
  out.height = img.height;
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr))
    throw DataError("cannot decode PNG '" + path.string() + "': " + img.message);
  return out;
}

}  // namespace

Rgb8Image read_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kRawMagic, 4) == 0) {
    const std::size_t expected = 4 + kPatchSize * kPatchSize * 3;
    if (bytes.size() != expected)
      throw DataError("raw image '" + path.string() + "' has " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expected) + " (96x96 RGB)");
    Rgb8Image out;
    out.width = out.height = kPatchSize;
    out.pixels.assign(bytes.begin() + 4, bytes.end());
    return out;
  }
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return decode_png(path, bytes);
  throw DataError("image '" + path.string() + "' is neither PNG nor R96A raw");
}

void write_png(const std::filesystem::path& path, const Rgb8Image& img) {
  png_image p;
  std::memset(&p, 0, sizeof p);
  p.version = PNG_IMAGE_VERSION;
  p.width = static_cast<png_uint_32>(img.width);
  p.height = static_cast<png_uint_32>(img.height);
  p.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&p, nullptr, &size, 0, img.pixels.data(), 0, nullptr))
    throw DataError("PNG encode failed: " + std::string(p.message));
  std::vector<std::uint8_t> buf(size);
  if (!png_image_write_to_memory(&p, buf.data(), &size, 0, img.pixels.data(), 0, nullptr))
    throw DataError("PNG encode failed: " + std::string(p.message));
  buf.resize(size);
  write_file_atomic(path, buf);
}

void write_raw(const std::filesystem::path& path, const Rgb8Image& img) {
  if (img.width != kPatchSize || img.height != kPatchSize)
    throw DimensionError("R96A images must be 96x96, got " + std::to_string(img.width) + "x" +
                         std::to_string(img.height));
  std::vector<std::uint8_t> buf(kRawMagic, kRawMagic + 4);
  buf.insert(buf.end(), img.pixels.begin(), img.pixels.end());
  write_file_atomic(path, buf);
}

}  // namespace cardionet
