#include <cmath>
#include <set>

#include "doctest.h"
#include "gridscan/datagen.hpp"
#include "gridscan/netpbm.hpp"
#include "gridscan/pipeline.hpp"
#include "test_helpers.hpp"

using namespace gridscan;
using namespace gridscan::datagen;

TEST_SUITE("datagen.sheet") {
  TEST_CASE("2x2 sheet without blanks") {
    SheetSpec s;
    s.rows = 2;
    s.cols = 2;
    s.blank_fraction = 0;
    const auto sheet = render_sheet(s, builtin_glyphs());
    CHECK(sheet.truth.rows() == 2);
    CHECK(sheet.truth.cols() == 2);
    for (const auto& row : sheet.truth.cells())
      for (const auto& cell : row) CHECK(cell.size() == 1);
    CHECK(sheet.col_xs.size() == 3);
    CHECK(sheet.row_ys.size() == 3);
    // every drawn line is dark along its full span
    for (int x : sheet.col_xs) CHECK(sheet.image(x, sheet.row_ys[1] + 5) == 0);
    for (int y : sheet.row_ys) CHECK(sheet.image(sheet.col_xs[1] + 5, y) == 0);
  }

  TEST_CASE("same seed, same bytes") {
    SheetSpec s;
    s.seed = 7;
    s.line_jitter = 3;
    const auto g = builtin_glyphs();
    const auto a = render_sheet(s, g), b = render_sheet(s, g);
    CHECK(a.image == b.image);
    CHECK(a.truth == b.truth);
    s.seed = 8;
    CHECK_FALSE(render_sheet(s, g).image == a.image);

    TempDir tmp;
    write_sheet(a, tmp.path(), 0);
    CHECK(load_gray(tmp / "sheet_0.pgm") == a.image);
    CHECK(eval::read_table(tmp / "sheet_0.csv") == a.truth);
  }

  TEST_CASE("spec validation") {
    SheetSpec s;
    s.line_thickness = 6;
    CHECK_THROWS_AS(s.validate(), SpecError);
    s = {};
    s.cell_w = 30;
    CHECK_THROWS_AS(s.validate(), SpecError);
    s = {};
    s.cell_w = 40;
    s.line_jitter = 5;  // neighbouring lines could come within 30 px
    CHECK_THROWS_AS(s.validate(), SpecError);
    s = {};
    s.cols = 60;
    s.cell_w = 70;
    CHECK_THROWS_AS(s.validate(), SpecError);
  }

  TEST_CASE("closed loop on a clean sheet") {
    for (int thickness = 1; thickness <= 3; ++thickness) {
      SheetSpec s;
      s.rows = 4;
      s.cols = 5;
      s.cell_w = 100;
      s.cell_h = 100;
      s.line_thickness = thickness;
      s.seed = static_cast<std::uint64_t>(thickness);
      const auto glyphs = builtin_glyphs();
      const auto sheet = render_sheet(s, glyphs);
      const auto model = centroid_fit(to_examples(glyph_images(glyphs)));
      const auto out = digitize(sheet.image, PipelineConfig{}, model);
      CHECK(out.detection.grid.cell_count() == 20);
      CHECK(out.table == sheet.truth);
    }
  }
}

TEST_SUITE("datagen.augment") {
  GrayImage gradient(int w, int h) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img(x, y) = static_cast<std::uint8_t>((x * 7 + y * 3) % 256);
    return img;
  }

  TEST_CASE("rotation") {
    GrayImage img(41, 41, 255);
    for (int y = 10; y < 31; ++y)
      for (int x = 15; x < 26; ++x) img(x, y) = static_cast<std::uint8_t>(x * 5);
    CHECK(rotate(img, 0) == img);
    const auto back = rotate(rotate(img, 10), -10);
    double diff = 0;
    for (std::size_t i = 0; i < img.pixels().size(); ++i)
      diff += std::abs(int{img.pixels()[i]} - int{back.pixels()[i]});
    CHECK(diff / static_cast<double>(img.pixels().size()) < 8.0);
    for (double deg : {-15.0, -7.5, 3.0, 15.0}) {
      const auto r = rotate(img, deg);
      CHECK(r.width() == 41);
      CHECK(r.height() == 41);
      CHECK(r(20, 20) == img(20, 20));
    }
    CHECK_THROWS_AS(rotate(img, 15.5), InvalidArgument);
    CHECK_THROWS_AS(rotate(img, -20), InvalidArgument);
    CHECK(rotate_any(img, 90).width() == 41);
  }

  TEST_CASE("flip and crop") {
    const auto img = gradient(10, 10);
    CHECK(flip(flip(img, Axis::horizontal), Axis::horizontal) == img);
    CHECK(flip(flip(img, Axis::vertical), Axis::vertical) == img);
    CHECK(flip(img, Axis::horizontal)(0, 3) == img(9, 3));
    CHECK(crop(img, {0, 0, 10, 10}) == img);
    const auto c = crop(img, {2, 2, 3, 3});
    CHECK(c.width() == 3);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) CHECK(c(x, y) == img(x + 2, y + 2));
    CHECK_THROWS_AS(crop(img, {8, 8, 3, 3}), InvalidArgument);
  }

  TEST_CASE("samples keep labels and sizes") {
    const auto s = digit_samples(30, 5);
    REQUIRE(s.size() == 30);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i].label == static_cast<int>(i % 10));
      CHECK(s[i].image.width() == 40);
      CHECK(s[i].image.height() == 40);
    }
  }
}

TEST_SUITE("datagen.split") {
  TEST_CASE("sizes, coverage and seeding") {
    const auto s = split_indices(10, kDefaultSplit, 1);
    CHECK(s.train.size() == 7);
    CHECK(s.test.size() == 2);
    CHECK(s.val.size() == 1);
    std::multiset<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    all.insert(s.val.begin(), s.val.end());
    CHECK(all == std::multiset<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});

    const auto again = split_indices(10, kDefaultSplit, 1);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);

    const auto big = split_indices(2000, kDefaultSplit, 3);
    CHECK(big.test.size() == 400);
    CHECK(big.val.size() == 200);
    CHECK(big.train.size() == 1400);
    CHECK(split_indices(7, kDefaultSplit, 0).train.size() == 6);  // 1 + 0 go to test/val, remainder to train
    CHECK_THROWS_AS(split_indices(10, {0.5, 0.2, 0.2}, 0), InvalidArgument);

    const auto items = split(std::vector<std::string>{"a", "b", "c"}, kDefaultSplit, 4);
    CHECK(items.train.size() + items.test.size() + items.val.size() == 3);
  }
}

TEST_SUITE("datagen.glyphs") {
  TEST_CASE("builtin glyphs cover every class and load from disk") {
    const auto g = builtin_glyphs(3, 1);
    CHECK(g.num_classes() == 10);
    for (const auto& v : g.by_class) CHECK(v.size() == 3);
    TempDir tmp;
    for (std::size_t c = 0; c < 10; ++c) {
      std::filesystem::create_directories(tmp / std::to_string(c));
      // exported glyphs are dark ink on white paper
      const auto& b = g.by_class[c][0];
      GrayImage page(b.width(), b.height(), 255);
      for (int y = 0; y < b.height(); ++y)
        for (int x = 0; x < b.width(); ++x)
          if (b(x, y)) page(x, y) = 30;
      save_image(page, tmp / std::to_string(c) / "a.pgm");
    }
    const auto loaded = load_glyph_dir(tmp.path());
    for (std::size_t c = 0; c < 10; ++c) {
      REQUIRE(loaded.by_class[c].size() == 1);
      CHECK(loaded.by_class[c][0] == g.by_class[c][0]);
    }
    std::filesystem::remove_all(tmp / "4");
    CHECK_THROWS(load_glyph_dir(tmp.path()));
  }
}
