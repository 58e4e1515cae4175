#include <cmath>

#include "doctest.h"
#include "gridscan/datagen.hpp"
#include "gridscan/pipeline.hpp"
#include "gridscan/recognizer.hpp"
#include "gridscan/rng.hpp"
#include "test_helpers.hpp"

using namespace gridscan;

namespace {

// Places a glyph centred on a white cell-sized canvas.
GrayImage stamp(const BinaryImage& glyph, int w, int h) {
  GrayImage cell(w, h, 255);
  const int ox = (w - glyph.width()) / 2, oy = (h - glyph.height()) / 2;
  for (int y = 0; y < glyph.height(); ++y)
    for (int x = 0; x < glyph.width(); ++x)
      if (glyph(x, y)) cell(ox + x, oy + y) = 20;
  return cell;
}

}  // namespace

TEST_SUITE("recognizer") {
  TEST_CASE("white and speckled cells are empty") {
    const auto model = builtin_centroid_model();
    const auto p = predict_cell(model, GrayImage(60, 60, 255));
    CHECK(p.is_empty);
    CHECK(label_text(p).empty());
    CHECK_FALSE(prepare_cell(GrayImage(60, 60, 255)).has_value());

    GrayImage speck(60, 60, 255);
    speck(30, 30) = 0;
    CHECK(predict_cell(model, speck).is_empty);

    // a ruling line along the border is not ink
    GrayImage ruled(60, 60, 255);
    for (int y = 0; y < 60; ++y) ruled(0, y) = ruled(1, y) = 0;
    CHECK(predict_cell(model, ruled).is_empty);
  }

  TEST_CASE("closed loop on the training glyphs") {
    const auto glyphs = datagen::builtin_glyphs(2, 99);
    const auto examples = to_examples(datagen::glyph_images(glyphs));
    const auto model = centroid_fit(examples);
    for (std::size_t d = 0; d < 10; ++d) {
      for (const auto& g : glyphs.by_class[d]) {
        const auto p = predict_cell(model, stamp(g, 80, 80));
        CHECK_FALSE(p.is_empty);
        CHECK(p.label == static_cast<int>(d));
        CHECK(p.confidence >= 0.1);
        CHECK(p.confidence <= 1.0);
      }
    }
  }

  TEST_CASE("one sample per class returns its own label") {
    std::vector<nn::Example> ex;
    Rng rng(4);
    for (int c = 0; c < 10; ++c) {
      nn::Example e{std::vector<float>(1024), c};
      for (auto& v : e.input) v = static_cast<float>(rng.uniform());
      ex.push_back(e);
    }
    const auto model = centroid_fit(ex);
    for (const auto& e : ex) CHECK(model.classify(e.input).label == e.label);
    CHECK_THROWS_AS(centroid_fit({}), EmptyDataset);
  }

  TEST_CASE("ties go to the lower class id") {
    std::vector<std::vector<float>> c(10, std::vector<float>(4, 0.0f));
    c[3] = c[7] = {1, 1, 1, 1};
    std::vector<bool> present(10, false);
    present[3] = present[7] = true;
    const CentroidModel m(c, present);
    CHECK(m.classify(std::vector<float>{1, 1, 1, 1}).label == 3);
    CHECK(m.classify(std::vector<float>{0.9f, 1, 1, 1}).label == 3);
  }

  TEST_CASE("nearest centroid matches an exhaustive scan") {
    Rng rng(5);
    std::vector<std::vector<float>> c(10, std::vector<float>(16));
    for (auto& v : c)
      for (auto& x : v) x = static_cast<float>(rng.uniform());
    const CentroidModel m(c, std::vector<bool>(10, true));
    for (int q = 0; q < 500; ++q) {
      std::vector<float> x(16);
      for (auto& v : x) v = static_cast<float>(rng.uniform());
      int best = -1;
      double best_d = INFINITY;
      for (int k = 0; k < 10; ++k) {
        double d = 0;
        for (std::size_t i = 0; i < 16; ++i) d += std::pow(double{x[i]} - c[static_cast<std::size_t>(k)][i], 2);
        if (d < best_d) best_d = d, best = k;
      }
      const auto p = m.classify(x);
      CHECK(p.label == best);
      CHECK(p.confidence >= 0.1);
      CHECK(p.confidence <= 1.0);
    }
  }

  TEST_CASE("cnn recognizer confidence bounds") {
    const CnnRecognizer cnn(nn::init_weights(nn::NetworkArch::classifier(), 1));
    const auto glyphs = datagen::builtin_glyphs(1, 3);
    const auto p = predict_cell(cnn, stamp(glyphs.by_class[4][0], 70, 70));
    CHECK_FALSE(p.is_empty);
    CHECK(p.label >= 0);
    CHECK(p.label < 10);
    CHECK(p.confidence >= 0.1);
    CHECK(p.confidence <= 1.0);
  }

  TEST_CASE("normalized glyph is 32x32 in [0,1]") {
    const auto glyphs = datagen::builtin_glyphs(1, 3);
    const auto v = prepare_cell(stamp(glyphs.by_class[1][0], 50, 90));
    REQUIRE(v.has_value());
    CHECK(v->size() == 1024);
    CHECK(std::all_of(v->begin(), v->end(), [](float x) { return x >= 0.0f && x <= 1.0f; }));
    CHECK(*std::max_element(v->begin(), v->end()) > 0.5f);
  }

  TEST_CASE("labeled directory ingest") {
    TempDir tmp;
    const auto samples = datagen::digit_samples(20, 3);
    datagen::write_samples(samples, tmp.path());
    const auto loaded = load_labeled_dir(tmp.path(), tmp / "labels.csv");
    REQUIRE(loaded.size() == samples.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
      CHECK(loaded[i].label == samples[i].label);
      CHECK(loaded[i].image == samples[i].image);
    }
    write_bytes(tmp / "bad.csv", "glyph_0.pgm,Z\n");
    CHECK_THROWS_AS(load_labeled_dir(tmp.path(), tmp / "bad.csv"), FormatError);
    CHECK(class_index("7") == 7);
    CHECK_THROWS_AS(class_index("x"), FormatError);
  }
}
