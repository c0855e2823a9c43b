#include <doctest.h>

#include <algorithm>
#include <set>

#include "cardionet/data.hpp"
#include "cardionet/errors.hpp"
#include "cardionet/image_io.hpp"
#include "cardionet/synthetic.hpp"
#include "test_util.hpp"

using namespace cardionet;

namespace {

Rgb8Image solid(std::size_t w, std::size_t h, std::uint8_t v) { return {w, h, std::vector<std::uint8_t>(w * h * 3, v)}; }

Tensor<float> random_image(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t({n, n, 3});
  for (auto& v : t.values) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

std::vector<float> sorted(std::vector<float> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<ManifestEntry> entries(std::size_t n) {
  std::vector<ManifestEntry> e;
  for (std::size_t i = 0; i < n; ++i) e.push_back({"img_" + std::to_string(i) + ".png", static_cast<int>(i % 2)});
  return e;
}

}  // namespace

TEST_SUITE("data-pipeline") {
  TEST_CASE("manifest parsing") {
    ScratchDir dir("manifest");
    write_text(dir / "m.csv", "path,label\na.png,1\nsub/b.png,0\n");
    const Manifest m = load_manifest(dir / "m.csv");
    REQUIRE(m.entries.size() == 2);
    CHECK(m.entries[0] == ManifestEntry{"a.png", 1});
    CHECK(m.entries[1] == ManifestEntry{"sub/b.png", 0});
    CHECK(m.resolve(m.entries[1]) == dir.path() / "sub/b.png");

    write_text(dir / "crlf.csv", "path,label\r\na.png,0\r\nb.png,1\r\n");
    CHECK(load_manifest(dir / "crlf.csv").entries.size() == 2);

    write_text(dir / "bad_label.csv", "path,label\na.png,1\nb.png,2\n");
    try {
      load_manifest(dir / "bad_label.csv");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    write_text(dir / "dup.csv", "path,label\na.png,1\na.png,0\n");
    CHECK_THROWS_AS(load_manifest(dir / "dup.csv"), DataError);
    write_text(dir / "header.csv", "file,label\na.png,1\n");
    CHECK_THROWS_AS(load_manifest(dir / "header.csv"), DataError);
    write_text(dir / "short.csv", "path,label\na.png\n");
    CHECK_THROWS_AS(load_manifest(dir / "short.csv"), DataError);
    CHECK_THROWS_AS(load_manifest(dir / "missing.csv"), DataError);
  }

  TEST_CASE("94-row manifest class counts") {
    ScratchDir dir("synth");
    const auto path = write_synthetic_dataset(dir.path(), SyntheticSpec{});
    const Manifest m = load_manifest(path);
    REQUIRE(m.entries.size() == 94);
    const auto ones = std::count_if(m.entries.begin(), m.entries.end(), [](auto& e) { return e.label == 1; });
    CHECK(ones == 51);
    CHECK(m.entries.size() - ones == 43);
  }

  TEST_CASE("manifest write/load round-trip") {
    ScratchDir dir("mrt");
    const auto e = entries(7);
    write_manifest(dir / "m.csv", e);
    CHECK(load_manifest(dir / "m.csv").entries == e);
  }

  TEST_CASE("image normalization") {
    ScratchDir dir("img");
    write_png(dir / "zero.png", solid(96, 96, 0));
    write_png(dir / "full.png", solid(96, 96, 255));
    write_raw(dir / "mid.r96", solid(96, 96, 128));
    for (float v : load_image(dir / "zero.png").values) CHECK(v == -1.0f);
    for (float v : load_image(dir / "full.png").values) CHECK(v == 1.0f);
    const float mid = static_cast<float>(128.0 / 127.5 - 1.0);
    for (float v : load_image(dir / "mid.r96").values) CHECK(v == mid);
    CHECK(mid == doctest::Approx(0.003921568627).epsilon(1e-6));
    for (int v = 0; v < 256; ++v) {
      const float x = normalize_pixel(static_cast<std::uint8_t>(v));
      CHECK((x >= -1.0f && x <= 1.0f));
    }
    CHECK(normalize_pixel(0) == -1.0f);
    CHECK(normalize_pixel(255) == 1.0f);
  }

  TEST_CASE("image round-trip and rejection") {
    ScratchDir dir("img2");
    Rgb8Image img{96, 96, {}};
    Rng rng(1);
    for (std::size_t i = 0; i < 96 * 96 * 3; ++i) img.pixels.push_back(static_cast<std::uint8_t>(rng.below(256)));
    write_png(dir / "r.png", img);
    write_raw(dir / "r.raw", img);
    const auto a = load_image(dir / "r.png"), b = load_image(dir / "r.raw");
    CHECK(a.values == b.values);
    CHECK(a.shape == Shape{96, 96, 3});
    for (std::size_t i = 0; i < img.pixels.size(); ++i) REQUIRE(a.values[i] == normalize_pixel(img.pixels[i]));

    write_png(dir / "small.png", solid(64, 96, 10));
    CHECK_THROWS_AS(load_image(dir / "small.png"), DimensionError);
    write_text(dir / "junk.png", "not an image at all");
    CHECK_THROWS_AS(load_image(dir / "junk.png"), DataError);
    write_text(dir / "trunc.raw", "R96A" + std::string(100, 'x'));
    CHECK_THROWS_AS(load_image(dir / "trunc.raw"), DataError);
    CHECK_THROWS_AS(load_image(dir / "absent.png"), DataError);
  }

  TEST_CASE("split_dataset") {
    const auto e = entries(94);
    const auto s = split_dataset(e, 65, 3);
    CHECK(s.train.size() == 65);
    CHECK(s.test.size() == 29);
    const auto again = split_dataset(e, 65, 3);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
    CHECK(split_hash(again) == split_hash(s));
    CHECK(split_hash(split_dataset(e, 65, 4)) != split_hash(s));

    std::set<std::string> tr, te, all;
    for (auto& x : s.train) tr.insert(x.path);
    for (auto& x : s.test) te.insert(x.path);
    for (auto& x : e) all.insert(x.path);
    std::set<std::string> both;
    std::set_intersection(tr.begin(), tr.end(), te.begin(), te.end(), std::inserter(both, both.end()));
    CHECK(both.empty());
    std::set<std::string> uni = tr;
    uni.insert(te.begin(), te.end());
    CHECK(uni == all);

    CHECK_THROWS_AS(split_dataset(e, 94, 1), ConfigError);
    CHECK_THROWS_AS(split_dataset(e, 0, 1), ConfigError);

    const auto st = split_dataset(e, 65, 3, true);
    CHECK(st.train.size() == 65);
    const auto ones = std::count_if(st.train.begin(), st.train.end(), [](auto& x) { return x.label == 1; });
    CHECK((ones == 32 || ones == 33));
  }

  TEST_CASE("augmentation") {
    const Sample s{random_image(12, 4), 1, "x"};
    const auto id = augment(s, AugmentationConfig::identity(), Rng(5));
    CHECK(id.pixels.values == s.pixels.values);
    CHECK(rotate90(rotate90(s.pixels, 2), 2).values == s.pixels.values);
    CHECK(rotate90(s.pixels, 4).values == s.pixels.values);
    CHECK(flip_horizontal(flip_horizontal(s.pixels)).values == s.pixels.values);
    CHECK(zoom_rotate(s.pixels, 1.0, 0.0).values == s.pixels.values);

    const auto sorted_in = sorted(s.pixels.values);
    for (int k = 1; k < 4; ++k) CHECK(sorted(rotate90(s.pixels, k).values) == sorted_in);
    CHECK(sorted(flip_horizontal(s.pixels).values) == sorted_in);
    CHECK(sorted(flip_vertical(s.pixels).values) == sorted_in);

    // Clockwise rotation: top-left corner moves to the top-right.
    const auto r = rotate90(s.pixels, 1);
    for (std::size_t c = 0; c < 3; ++c) CHECK(r.values[(0 * 12 + 11) * 3 + c] == s.pixels.values[c]);

    AugmentationConfig cfg;
    for (std::uint64_t i = 0; i < 20; ++i) {
      const auto a = augment(s, cfg, Rng(9).substream("augment", {i, 1}));
      CHECK(a.label == 1);
      CHECK(a.pixels.shape == s.pixels.shape);
      CHECK(a.pixels.values == augment(s, cfg, Rng(9).substream("augment", {i, 1})).pixels.values);
    }
    // Zoom out pads with zeros at the border; zoom in keeps the center pixel.
    const auto out = zoom_rotate(s.pixels, 0.5, 0.0);
    for (std::size_t c = 0; c < 3; ++c) CHECK(out.values[c] == 0.0f);

    AugmentationConfig bad;
    bad.zoom_lo = 1.2;
    bad.zoom_hi = 1.1;
    CHECK_THROWS_AS(augment(s, bad, Rng(1)), ConfigError);
    bad = AugmentationConfig{};
    bad.rotations = {45};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("batch_iter") {
    const auto b = batch_iter(65, 16, 7, 1);
    std::vector<std::size_t> sizes;
    for (auto& x : b) sizes.push_back(x.size());
    CHECK(sizes == std::vector<std::size_t>{16, 16, 16, 16, 1});
    CHECK(batch_iter(65, 16, 7, 1) == b);
    CHECK(batch_iter(65, 16, 7, 2) != b);
    std::vector<std::size_t> flat;
    for (auto& x : b) flat.insert(flat.end(), x.begin(), x.end());
    std::sort(flat.begin(), flat.end());
    for (std::size_t i = 0; i < 65; ++i) CHECK(flat[i] == i);
    CHECK_THROWS_AS(batch_iter(0, 4, 1, 1), DataError);
  }

  TEST_CASE("synthetic textures differ in spatial frequency") {
    // Mean absolute horizontal gradient separates the two classes.
    auto roughness = [](const Rgb8Image& img) {
      double s = 0.0;
      for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 1; x < img.width; ++x)
          s += std::abs(static_cast<int>(img.pixels[(y * img.width + x) * 3]) -
                        static_cast<int>(img.pixels[(y * img.width + x - 1) * 3]));
      return s / static_cast<double>(img.height * (img.width - 1));
    };
    for (std::uint64_t i = 0; i < 10; ++i) {
      const auto lo = synthetic_texture(TextureClass::Smooth, Rng(i));
      const auto hi = synthetic_texture(TextureClass::HighFrequency, Rng(i));
      CHECK(lo.width == 96);
      CHECK(roughness(hi) > roughness(lo));
    }
  }
}
