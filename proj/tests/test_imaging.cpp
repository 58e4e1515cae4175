#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gridscan/netpbm.hpp"
#include "gridscan/preprocess.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace gridscan;

namespace {

GrayImage random_gray(Rng& rng, int w, int h) {
  GrayImage g(w, h);
  for (auto& v : g.pixels()) v = static_cast<std::uint8_t>(rng.below(256));
  return g;
}

}  // namespace

TEST_SUITE("imaging.codec") {
  TEST_CASE("P5 decode of a 2x2 raster") {
    TempDir tmp;
    write_bytes(tmp / "a.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\x40", 4));
    const auto img = load_image(tmp / "a.pgm");
    REQUIRE(std::holds_alternative<GrayImage>(img));
    CHECK(std::get<GrayImage>(img) == GrayImage(2, 2, {0, 255, 128, 64}));
  }

  TEST_CASE("P6 decode of one red pixel") {
    TempDir tmp;
    write_bytes(tmp / "r.ppm", std::string("P6\n1 1\n255\n\xff\x00\x00", 14));
    const auto img = load_image(tmp / "r.ppm");
    REQUIRE(std::holds_alternative<RgbImage>(img));
    CHECK(std::get<RgbImage>(img) == RgbImage(1, 1, Rgb{255, 0, 0}));
  }

  TEST_CASE("header comments are tolerated") {
    const std::string bytes = "P5\n# made by hand\n2 # width\n1\n# maxval next\n255\n\x07\x09";
    const auto img = decode_netpbm(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
    CHECK(std::get<GrayImage>(img) == GrayImage(2, 1, {7, 9}));
  }

  TEST_CASE("format errors") {
    TempDir tmp;
    write_bytes(tmp / "bad.pgm", "P9\n1 1\n255\n\x01");
    CHECK_THROWS_AS(load_image(tmp / "bad.pgm"), FormatError);
    write_bytes(tmp / "maxval.pgm", "P5\n1 1\n65535\n\x01\x01");
    CHECK_THROWS_AS(load_image(tmp / "maxval.pgm"), FormatError);
    write_bytes(tmp / "short.pgm", "P5\n4 4\n255\n\x01\x02");
    CHECK_THROWS_AS(load_image(tmp / "short.pgm"), FormatError);
    CHECK_THROWS_AS(load_image(tmp / "missing.pgm"), IoError);
  }

  TEST_CASE("binary masks are written as 0/255 P5") {
    const auto bytes = encode_pgm(BinaryImage(1, 2, {1, 0}));
    const std::string header = "P5\n1 2\n255\n";
    REQUIRE(bytes.size() == header.size() + 2);
    CHECK(std::equal(header.begin(), header.end(), bytes.begin()));
    CHECK(bytes[header.size()] == 255);
    CHECK(bytes[header.size() + 1] == 0);
  }

  TEST_CASE("unwritable destination") {
    CHECK_THROWS_AS(save_image(GrayImage(1, 1), "/nonexistent-dir/x/y.pgm"), IoError);
  }

  TEST_CASE("round trips are bit exact for all raster types") {
    TempDir tmp;
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
      const int w = 1 + static_cast<int>(rng.below(17)), h = 1 + static_cast<int>(rng.below(13));
      const GrayImage g = random_gray(rng, w, h);
      save_image(g, tmp / "g.pgm");
      CHECK(std::get<GrayImage>(load_image(tmp / "g.pgm")) == g);

      std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w * h * 3));
      for (auto& v : rgb) v = static_cast<std::uint8_t>(rng.below(256));
      const RgbImage c(w, h, rgb);
      save_image(c, tmp / "c.ppm");
      CHECK(std::get<RgbImage>(load_image(tmp / "c.ppm")) == c);

      const BinaryImage m = oracle::random_mask(rng, w, h, 0.5);
      save_image(m, tmp / "m.pgm");
      CHECK(load_binary(tmp / "m.pgm") == m);
    }
  }
}

TEST_SUITE("imaging.ops") {
  TEST_CASE("to_grayscale luma") {
    const RgbImage img(3, 1, {255, 255, 255, 0, 0, 0, 255, 0, 0});
    const auto g = to_grayscale(img);
    CHECK(g(0, 0) == 255);
    CHECK(g(1, 0) == 0);
    CHECK(g(2, 0) == 76);
  }

  TEST_CASE("resize") {
    Rng rng(3);
    const GrayImage big = random_gray(rng, 1000, 1000);
    CHECK(resize(big) == big);

    const GrayImage flat(37, 53, 91);
    const auto up = resize(flat);
    CHECK(up.width() == 1000);
    CHECK(up.height() == 1000);
    CHECK(std::all_of(up.pixels().begin(), up.pixels().end(), [](auto v) { return v == 91; }));

    const auto row = resize(GrayImage(2, 1, {0, 255}), 4, 1);
    for (int x = 1; x < 4; ++x) CHECK(row(x - 1, 0) <= row(x, 0));
    // direct bilinear evaluation: centres map to -0.25, 0.25, 0.75, 1.25
    CHECK(row(0, 0) == 0);
    CHECK(row(1, 0) == 64);
    CHECK(row(2, 0) == 191);
    CHECK(row(3, 0) == 255);

    CHECK_THROWS_AS(resize(flat, 0, 10), InvalidArgument);
  }

  TEST_CASE("gaussian taps") {
    // independent evaluation of exp(-d^2 / (2 * 1.1^2)), normalised
    double raw[5], sum = 0;
    for (int i = 0; i < 5; ++i) sum += raw[i] = std::exp(-(i - 2.0) * (i - 2.0) / 2.42);
    const auto taps = gaussian_taps_5();
    for (int i = 0; i < 5; ++i) CHECK(taps[static_cast<std::size_t>(i)] == doctest::Approx(raw[i] / sum).epsilon(1e-12));
  }

  TEST_CASE("blur preserves constants and places the impulse response") {
    const auto flat = gaussian_blur_5x5(GrayImage(12, 9, 200));
    CHECK(std::all_of(flat.pixels().begin(), flat.pixels().end(), [](auto v) { return v == 200; }));

    GrayImage dot(9, 9, 0);
    dot(4, 4) = 255;
    // k00 = 0.3695464595^2 computed offline; round(255 * 0.136564586) = 35
    CHECK(gaussian_blur_5x5(dot)(4, 4) == 35);

    CHECK_THROWS_AS(gaussian_blur_5x5(GrayImage(4, 9)), InvalidArgument);
  }

  TEST_CASE("blur output stays within the local range and conserves mass") {
    Rng rng(5);
    const auto taps = gaussian_taps_5();
    for (int t = 0; t < 20; ++t) {
      // support kept 3 px away from the border so reflection moves no mass
      GrayImage img(24, 20, 0);
      for (int y = 3; y < 17; ++y)
        for (int x = 3; x < 21; ++x) img(x, y) = static_cast<std::uint8_t>(rng.below(256));
      const auto out = gaussian_blur_5x5(img);
      const auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
      double in_sum = 0, out_sum = 0, oracle_sum = 0;
      for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 24; ++x) {
          CHECK(out(x, y) >= *lo);
          CHECK(out(x, y) <= *hi);
          in_sum += img(x, y);
          out_sum += out(x, y);
          // brute-force 2-D convolution
          double acc = 0;
          for (int v = 0; v < 5; ++v)
            for (int u = 0; u < 5; ++u) {
              const int xx = x + u - 2, yy = y + v - 2;
              if (xx < 0 || yy < 0 || xx >= 24 || yy >= 20) continue;
              acc += taps[static_cast<std::size_t>(u)] * taps[static_cast<std::size_t>(v)] * img(xx, yy);
            }
          CHECK(std::abs(acc - out(x, y)) <= 0.5 + 1e-9);
          oracle_sum += acc;
        }
      CHECK(std::abs(out_sum - in_sum) <= 0.005 * in_sum);
      CHECK(oracle_sum == doctest::Approx(in_sum).epsilon(1e-9));
    }
  }

  TEST_CASE("adaptive threshold") {
    for (int v : {0, 8, 128, 255}) {
      const auto m = adaptive_threshold(GrayImage(20, 17, static_cast<std::uint8_t>(v)));
      CHECK(std::all_of(m.pixels().begin(), m.pixels().end(), [](auto p) { return p == 0; }));
    }
    GrayImage white(31, 31, 255);
    white(15, 15) = 0;
    const auto m = adaptive_threshold(white);
    CHECK(m(15, 15) == 1);
    CHECK(std::accumulate(m.pixels().begin(), m.pixels().end(), 0) == 1);

    GrayImage faint(31, 31, 250);
    faint(15, 15) = 245;
    // mean = (224 * 250 + 245) / 225 = 249.98; 245 > 241.98
    CHECK(adaptive_threshold(faint)(15, 15) == 0);

    CHECK_THROWS_AS(adaptive_threshold(white, 14), InvalidArgument);
    CHECK_THROWS_AS(adaptive_threshold(white, 1), InvalidArgument);
  }

  TEST_CASE("threshold agrees with a per-block mean oracle") {
    Rng rng(8);
    const GrayImage img = random_gray(rng, 23, 19);
    const auto m = adaptive_threshold(img, 7, 5.0);
    for (int y = 0; y < 19; ++y)
      for (int x = 0; x < 23; ++x) {
        double sum = 0;
        for (int v = -3; v <= 3; ++v)
          for (int u = -3; u <= 3; ++u) {
            int xx = x + u, yy = y + v;
            xx = xx < 0 ? -xx : (xx >= 23 ? 2 * 22 - xx : xx);
            yy = yy < 0 ? -yy : (yy >= 19 ? 2 * 18 - yy : yy);
            sum += img(xx, yy);
          }
        CHECK(m(x, y) == (img(x, y) <= sum / 49.0 - 5.0 ? 1 : 0));
      }
  }
}

TEST_SUITE("imaging.morphology") {
  TEST_CASE("erode with a 1x3 element clears the top and bottom rows") {
    const auto out = erode(BinaryImage(5, 4, 1), StructuringElement(1, 3));
    for (int x = 0; x < 5; ++x) {
      CHECK(out(x, 0) == 0);
      CHECK(out(x, 3) == 0);
      CHECK(out(x, 1) == 1);
      CHECK(out(x, 2) == 1);
    }
  }

  TEST_CASE("dilate a single pixel into a vertical run") {
    BinaryImage img(5, 5);
    img(2, 2) = 1;
    const auto out = dilate(img, StructuringElement(1, 3));
    CHECK(std::accumulate(out.pixels().begin(), out.pixels().end(), 0) == 3);
    CHECK(out(2, 1) == 1);
    CHECK(out(2, 2) == 1);
    CHECK(out(2, 3) == 1);
  }

  TEST_CASE("primitives match the definition oracle") {
    Rng rng(21);
    for (int t = 0; t < 60; ++t) {
      const int sw = 1 + static_cast<int>(rng.below(6)), sh = 1 + static_cast<int>(rng.below(6));
      const auto m = oracle::random_mask(rng, 16, 16, rng.uniform(0.2, 0.9));
      CHECK(erode(m, {sw, sh}) == oracle::erode(m, sw, sh));
      CHECK(dilate(m, {sw, sh}) == oracle::dilate(m, sw, sh));
    }
  }

  TEST_CASE("closing is extensive away from the border") {
    // erosion reads outside pixels as 0, so a set pixel whose element
    // window leaves the image can be lost; everywhere else closing keeps it
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
      const auto m = oracle::random_mask(rng, 16, 16, 0.3);
      const int sw = 1 + static_cast<int>(rng.below(5)), sh = 1 + static_cast<int>(rng.below(5));
      const auto closed = erode(dilate(m, {sw, sh}), {sw, sh});
      for (int y = sh; y < 16 - sh; ++y)
        for (int x = sw; x < 16 - sw; ++x)
          if (m(x, y)) CHECK(closed(x, y) == 1);
    }
  }

  TEST_CASE("opening with a 1x30 element") {
    BinaryImage dot(50, 50);
    dot(20, 20) = 1;
    const auto se = StructuringElement::vertical(30);
    const auto cleared = morph_open(dot, se);
    CHECK(std::all_of(cleared.pixels().begin(), cleared.pixels().end(), [](auto v) { return v == 0; }));

    BinaryImage line(50, 60);
    for (int y = 5; y < 45; ++y) line(17, y) = 1;
    CHECK(morph_open(line, se) == line);

    BinaryImage short_line(50, 60);
    for (int y = 5; y < 34; ++y) short_line(17, y) = 1;
    CHECK(morph_open(short_line, se) == BinaryImage(50, 60));
  }

  TEST_CASE("combine_masks") {
    Rng rng(4);
    const auto h = oracle::random_mask(rng, 9, 7, 0.4);
    const auto v = oracle::random_mask(rng, 9, 7, 0.4);
    CHECK(combine_masks(BinaryImage(9, 7), h) == h);
    CHECK(combine_masks(h, v) == combine_masks(v, h));
    CHECK(combine_masks(h, h) == h);
    const auto both = combine_masks(BinaryImage(9, 7, 1), BinaryImage(9, 7, 1));
    CHECK(std::all_of(both.pixels().begin(), both.pixels().end(), [](auto p) { return p == 1; }));
    const auto sum = [](const BinaryImage& m) { return std::accumulate(m.pixels().begin(), m.pixels().end(), 0); };
    CHECK(sum(combine_masks(h, v)) <= sum(h) + sum(v));
    CHECK_THROWS_AS(combine_masks(h, BinaryImage(9, 8)), DimMismatch);
  }
}

TEST_SUITE("imaging.morphology") {
  TEST_CASE("opening is idempotent, anti-extensive and monotone") {
    Rng rng(99);
    for (int t = 0; t < 100; ++t) {
      const int sw = 1 + static_cast<int>(rng.below(8)), sh = 1 + static_cast<int>(rng.below(8));
      const StructuringElement se(sw, sh);
      const auto x = oracle::random_mask(rng, 32, 64, rng.uniform(0.3, 0.9));
      const auto opened = morph_open(x, se);
      CHECK(opened == oracle::dilate(oracle::erode(x, sw, sh), sw, sh));
      CHECK(morph_open(opened, se) == opened);
      CHECK(oracle::leq(opened, x));
      // y ⊇ x by OR-ing in extra noise
      const auto y = combine_masks(x, oracle::random_mask(rng, 32, 64, 0.2));
      CHECK(oracle::leq(opened, morph_open(y, se)));
    }
  }
}
