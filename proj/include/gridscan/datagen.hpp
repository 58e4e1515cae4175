#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridscan/eval.hpp"
#include "gridscan/image.hpp"
#include "gridscan/recognizer.hpp"
#include "gridscan/rng.hpp"

namespace gridscan::datagen {

/// Per-class glyph rasters (1 = ink).
struct GlyphSet {
  std::vector<std::vector<BinaryImage>> by_class;
  std::string classes = kDigitClasses;

  std::size_t num_classes() const noexcept { return by_class.size(); }
  /// Throws SpecError unless every class has at least one glyph.
  void validate() const;
};

/// Stroke-rendering controls for procedural digits.
struct StrokeStyle {
  int size = 40;               // square raster side
  double thickness = 0.09;     // stroke width as a fraction of size
  double jitter = 0.0;         // per-point displacement, fraction of size
  double shear = 0.0;
  double scale_x = 1.0, scale_y = 1.0;
  double rotation_deg = 0.0;
};

/// Rasterises digit `d` (0-9) from its polyline skeleton.
BinaryImage render_digit(int d, const StrokeStyle& style, Rng* rng = nullptr);

/// Deterministic built-in digit set: variant 0 is the clean skeleton, the
/// others are seeded perturbations of it.
GlyphSet builtin_glyphs(int variants = 4, std::uint64_t seed = 0x5eed, int size = 40);

/// Imports `<dir>/<class>/<name>.pgm`; pixels darker than 128 are ink.
GlyphSet load_glyph_dir(const std::filesystem::path& dir, const std::string& classes = kDigitClasses);

struct SheetSpec {
  int rows = 8;
  int cols = 12;
  int cell_w = 80;
  int cell_h = 80;
  int line_thickness = 2;
  int line_jitter = 0;  // max per-line displacement in pixels
  int margin = 20;
  double blank_fraction = 0.2;
  double glyph_scale = 0.6;   // glyph side relative to the smaller cell side
  double glyph_jitter = 0.1;  // max centre offset relative to cell size
  std::uint64_t seed = 0;

  /// Throws SpecError on spacing, thickness or size violations.
  void validate() const;
  int canvas_width() const noexcept { return 2 * margin + cols * cell_w + line_thickness; }
  int canvas_height() const noexcept { return 2 * margin + rows * cell_h + line_thickness; }
};

inline constexpr int kMaxCanvas = 4000;

struct RenderedSheet {
  GrayImage image;
  eval::Table truth;
  std::vector<int> col_xs;  // drawn left edge of each vertical line
  std::vector<int> row_ys;  // drawn top edge of each horizontal line
};

/// White canvas, black grid lines, one glyph stamped per non-blank cell.
/// A pure function of (spec, glyphs).
RenderedSheet render_sheet(const SheetSpec& spec, const GlyphSet& glyphs);

/// Writes sheet_<k>.pgm and sheet_<k>.csv into `dir`.
void write_sheet(const RenderedSheet& sheet, const std::filesystem::path& dir, int k);

/// Rotation about the image centre with bilinear sampling and white fill.
/// Angles outside [-15, 15] degrees throw InvalidArgument.
GrayImage rotate(const GrayImage& img, double degrees);

/// Unrestricted variant used internally.
GrayImage rotate_any(const GrayImage& img, double degrees, std::uint8_t fill = 255);

enum class Axis { horizontal, vertical };

/// horizontal mirrors left-right, vertical mirrors top-bottom.
GrayImage flip(const GrayImage& img, Axis axis);

/// Throws InvalidArgument when `rect` leaves the image or is empty.
GrayImage crop(const GrayImage& img, const Rect& rect);

template <typename T>
struct Splits {
  std::vector<T> train, test, val;
};

inline constexpr std::array<double, 3> kDefaultSplit{0.70, 0.20, 0.10};

/// Index partition behind split(): seeded shuffle, then test and val take
/// floor(n * f) items and train takes the rest.
Splits<std::size_t> split_indices(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed);

template <typename T>
Splits<T> split(const std::vector<T>& items, std::array<double, 3> fractions, std::uint64_t seed) {
  const auto idx = split_indices(items.size(), fractions, seed);
  Splits<T> out;
  for (auto i : idx.train) out.train.push_back(items[i]);
  for (auto i : idx.test) out.test.push_back(items[i]);
  for (auto i : idx.val) out.val.push_back(items[i]);
  return out;
}

struct SampleSpec {
  int side = 40;
  double max_rotation = 15.0;
  double jitter = 0.02;
};

/// `n` labelled digit images on white, classes round-robin, each a fresh
/// perturbation of the skeleton plus a random in-range rotation.
std::vector<LabeledImage> digit_samples(std::size_t n, std::uint64_t seed, const SampleSpec& spec = {});

/// Writes glyph_<k>.pgm files plus labels.csv (filename,label).
void write_samples(const std::vector<LabeledImage>& samples, const std::filesystem::path& dir,
                   const std::string& classes = kDigitClasses);

/// Renders every glyph of the set onto a white canvas (ink 0) for training
/// a recogniser on exactly the generating glyphs.
std::vector<LabeledImage> glyph_images(const GlyphSet& glyphs, int pad = 4);

}  // namespace gridscan::datagen
