#include "gridscan/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gridscan/csv.hpp"
#include "gridscan/netpbm.hpp"

namespace gridscan::datagen {
namespace {

struct Pt {
  double x, y;
};
using Stroke = std::vector<Pt>;

// Ellipse arc; angles in degrees, 0 = +x, 90 = +y (down).
Stroke arc(double cx, double cy, double rx, double ry, double a0, double a1, int n = 24) {
  Stroke s;
  for (int i = 0; i <= n; ++i) {
    const double a = (a0 + (a1 - a0) * i / n) * std::numbers::pi / 180.0;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return s;
}

Stroke join(Stroke a, const Stroke& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Skeletons in the unit square, y pointing down.
std::vector<Stroke> skeleton(int d) {
  switch (d) {
    case 0: return {arc(0.5, 0.5, 0.27, 0.41, 0, 360, 40)};
    case 1: return {{{0.34, 0.24}, {0.52, 0.08}, {0.52, 0.92}}};
    case 2: return {join(arc(0.5, 0.32, 0.25, 0.22, 190, 380), {{0.22, 0.92}, {0.8, 0.92}})};
    case 3: return {join(arc(0.49, 0.29, 0.24, 0.20, 205, 450), arc(0.49, 0.70, 0.27, 0.22, 270, 520))};
    case 4: return {{{0.66, 0.92}, {0.66, 0.08}, {0.2, 0.66}, {0.84, 0.66}}};
    case 5: return {join({{0.78, 0.08}, {0.32, 0.08}, {0.28, 0.46}}, arc(0.5, 0.67, 0.27, 0.25, 215, 500))};
    case 6: return {join({{0.72, 0.1}, {0.46, 0.2}, {0.3, 0.44}}, arc(0.5, 0.7, 0.23, 0.21, 180, 540))};
    case 7: return {{{0.2, 0.08}, {0.8, 0.08}, {0.42, 0.92}}};
    case 8: return {arc(0.5, 0.28, 0.21, 0.19, 0, 360, 32), arc(0.5, 0.7, 0.26, 0.22, 0, 360, 32)};
    case 9: return {arc(0.5, 0.32, 0.24, 0.22, 0, 360, 32), {{0.74, 0.32}, {0.66, 0.92}}};
    default: throw InvalidArgument("render_digit: digit must be 0-9");
  }
}

double segment_distance(Pt p, Pt a, Pt b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

void stamp_line(GrayImage& img, int pos, int thickness, bool vertical) {
  if (vertical) {
    for (int x = pos; x < pos + thickness; ++x) {
      if (x < 0 || x >= img.width()) continue;
      for (int y = 0; y < img.height(); ++y) img(x, y) = 0;
    }
  } else {
    for (int y = pos; y < pos + thickness; ++y) {
      if (y < 0 || y >= img.height()) continue;
      for (int x = 0; x < img.width(); ++x) img(x, y) = 0;
    }
  }
}

}  // namespace

void GlyphSet::validate() const {
  if (by_class.empty()) throw SpecError("glyph set has no classes");
  if (by_class.size() > classes.size()) throw SpecError("glyph set has more classes than class symbols");
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    if (by_class[k].empty()) throw SpecError("glyph set has no glyph for class " + std::to_string(k));
  }
}

BinaryImage render_digit(int d, const StrokeStyle& style, Rng* rng) {
  if (style.size < 4) throw InvalidArgument("render_digit: raster too small");
  const double rot = style.rotation_deg * std::numbers::pi / 180.0;
  const double cr = std::cos(rot), sr = std::sin(rot);
  std::vector<Stroke> strokes = skeleton(d);
  for (auto& s : strokes) {
    for (auto& p : s) {
      double x = p.x - 0.5, y = p.y - 0.5;
      x = style.scale_x * x + style.shear * y;
      y = style.scale_y * y;
      p = {0.5 + cr * x - sr * y, 0.5 + sr * x + cr * y};
      if (rng && style.jitter > 0) {
        p.x += rng->uniform(-style.jitter, style.jitter);
        p.y += rng->uniform(-style.jitter, style.jitter);
      }
    }
  }
  const double half = style.thickness / 2.0;
  BinaryImage out(style.size, style.size);
  for (int y = 0; y < style.size; ++y) {
    for (int x = 0; x < style.size; ++x) {
      const Pt p{(x + 0.5) / style.size, (y + 0.5) / style.size};
      bool ink = false;
      for (const auto& s : strokes) {
        for (std::size_t i = 0; i + 1 < s.size() && !ink; ++i) ink = segment_distance(p, s[i], s[i + 1]) <= half;
        if (ink) break;
      }
      out(x, y) = ink ? 1 : 0;
    }
  }
  return out;
}

GlyphSet builtin_glyphs(int variants, std::uint64_t seed, int size) {
  if (variants < 1) throw InvalidArgument("builtin_glyphs: need at least one variant");
  GlyphSet set;
  set.by_class.resize(10);
  Rng rng(seed);
  for (int d = 0; d < 10; ++d) {
    for (int v = 0; v < variants; ++v) {
      StrokeStyle style;
      style.size = size;
      if (v > 0) {
        style.thickness = rng.uniform(0.08, 0.11);
        style.jitter = 0.012;
        style.shear = rng.uniform(-0.12, 0.12);
        style.scale_x = rng.uniform(0.92, 1.05);
        style.scale_y = rng.uniform(0.95, 1.0);
        style.rotation_deg = rng.uniform(-5.0, 5.0);
      }
      set.by_class[static_cast<std::size_t>(d)].push_back(render_digit(d, style, v > 0 ? &rng : nullptr));
    }
  }
  return set;
}

GlyphSet load_glyph_dir(const std::filesystem::path& dir, const std::string& classes) {
  if (!std::filesystem::is_directory(dir)) throw IoError("glyph directory not found: " + dir.string());
  GlyphSet set;
  set.classes = classes;
  set.by_class.resize(classes.size());
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto sub = dir / std::string(1, classes[k]);
    if (!std::filesystem::is_directory(sub)) continue;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(sub)) {
      if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const GrayImage g = load_gray(f);
      BinaryImage b(g.width(), g.height());
      for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) b(x, y) = g(x, y) < 128 ? 1 : 0;
      }
      set.by_class[k].push_back(std::move(b));
    }
  }
  // Trailing classes without glyphs are dropped; gaps are an error.
  while (!set.by_class.empty() && set.by_class.back().empty()) set.by_class.pop_back();
  set.validate();
  return set;
}

void SheetSpec::validate() const {
  if (rows < 1 || cols < 1) throw SpecError("sheet needs at least one row and one column");
  if (line_thickness < 1 || line_thickness > 5) throw SpecError("line thickness must be 1-5 px");
  if (line_jitter < 0 || margin < line_jitter) throw SpecError("line jitter must be in [0, margin]");
  if (cell_w - 2 * line_jitter <= 30 || cell_h - 2 * line_jitter <= 30) {
    throw SpecError("cell size must exceed 30 px plus twice the line jitter");
  }
  if (cell_w - 2 * line_jitter - line_thickness < 8 || cell_h - 2 * line_jitter - line_thickness < 8) {
    throw SpecError("cells too small for their lines");
  }
  if (canvas_width() > kMaxCanvas || canvas_height() > kMaxCanvas) throw SpecError("canvas exceeds 4000x4000");
  if (!(blank_fraction >= 0.0 && blank_fraction <= 1.0)) throw SpecError("blank_fraction must be in [0, 1]");
  if (!(glyph_scale > 0.0 && glyph_scale <= 0.8)) throw SpecError("glyph_scale must be in (0, 0.8]");
  if (!(glyph_jitter >= 0.0 && glyph_jitter <= 0.1)) throw SpecError("glyph_jitter must be in [0, 0.1]");
}

RenderedSheet render_sheet(const SheetSpec& spec, const GlyphSet& glyphs) {
  spec.validate();
  glyphs.validate();
  Rng rng(spec.seed);
  RenderedSheet out{GrayImage(spec.canvas_width(), spec.canvas_height(), 255),
                    eval::Table(static_cast<std::size_t>(spec.rows), static_cast<std::size_t>(spec.cols)),
                    {},
                    {}};
  for (int k = 0; k <= spec.cols; ++k) {
    const int j = spec.line_jitter ? rng.uniform_int(-spec.line_jitter, spec.line_jitter) : 0;
    out.col_xs.push_back(spec.margin + k * spec.cell_w + j);
  }
  for (int k = 0; k <= spec.rows; ++k) {
    const int j = spec.line_jitter ? rng.uniform_int(-spec.line_jitter, spec.line_jitter) : 0;
    out.row_ys.push_back(spec.margin + k * spec.cell_h + j);
  }
  for (int x : out.col_xs) stamp_line(out.image, x, spec.line_thickness, true);
  for (int y : out.row_ys) stamp_line(out.image, y, spec.line_thickness, false);

  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      if (rng.bernoulli(spec.blank_fraction)) continue;
      const auto cls = static_cast<std::size_t>(rng.below(glyphs.num_classes()));
      const auto& variants = glyphs.by_class[cls];
      const auto& glyph = variants[static_cast<std::size_t>(rng.below(variants.size()))];
      const std::uint8_t ink = static_cast<std::uint8_t>(rng.uniform_int(0, 60));

      const int x0 = out.col_xs[static_cast<std::size_t>(c)] + spec.line_thickness;
      const int x1 = out.col_xs[static_cast<std::size_t>(c) + 1];
      const int y0 = out.row_ys[static_cast<std::size_t>(r)] + spec.line_thickness;
      const int y1 = out.row_ys[static_cast<std::size_t>(r) + 1];
      const double cw = x1 - x0, ch = y1 - y0;
      const double side = spec.glyph_scale * std::min(cw, ch);
      const double gw = side * glyph.width() / std::max(glyph.width(), glyph.height());
      const double gh = side * glyph.height() / std::max(glyph.width(), glyph.height());
      const double cx = x0 + cw / 2.0 + rng.uniform(-spec.glyph_jitter, spec.glyph_jitter) * cw;
      const double cy = y0 + ch / 2.0 + rng.uniform(-spec.glyph_jitter, spec.glyph_jitter) * ch;
      const double gx0 = cx - gw / 2.0, gy0 = cy - gh / 2.0;

      // Nearest-neighbour stamp of the glyph raster onto its target box.
      for (int y = static_cast<int>(std::floor(gy0)); y < static_cast<int>(std::ceil(gy0 + gh)); ++y) {
        for (int x = static_cast<int>(std::floor(gx0)); x < static_cast<int>(std::ceil(gx0 + gw)); ++x) {
          if (x < x0 || y < y0 || x >= x1 || y >= y1) continue;
          const double u = (x + 0.5 - gx0) / gw * glyph.width();
          const double v = (y + 0.5 - gy0) / gh * glyph.height();
          if (u < 0 || v < 0 || u >= glyph.width() || v >= glyph.height()) continue;
          if (glyph(static_cast<int>(u), static_cast<int>(v))) out.image(x, y) = ink;
        }
      }
      out.truth.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = std::string(1, glyphs.classes[cls]);
    }
  }
  return out;
}

void write_sheet(const RenderedSheet& sheet, const std::filesystem::path& dir, int k) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const std::string stem = "sheet_" + std::to_string(k);
  save_image(sheet.image, dir / (stem + ".pgm"));
  eval::write_table(sheet.truth, dir / (stem + ".csv"));
}

GrayImage rotate_any(const GrayImage& img, double degrees, std::uint8_t fill) {
  if (degrees == 0.0) return img;
  const double a = degrees * std::numbers::pi / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  const double cx = (img.width() - 1) / 2.0, cy = (img.height() - 1) / 2.0;
  GrayImage out(img.width(), img.height(), fill);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      // inverse map: rotate the output coordinate by -angle
      const double dx = x - cx, dy = y - cy;
      const double sx = cx + ca * dx + sa * dy;
      const double sy = cy - sa * dx + ca * dy;
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const double tx = sx - x0, ty = sy - y0;
      auto px = [&](int xx, int yy) -> double { return img.contains(xx, yy) ? img(xx, yy) : fill; };
      if (sx < -1 || sy < -1 || sx > img.width() || sy > img.height()) continue;
      const double v = (px(x0, y0) * (1 - tx) + px(x0 + 1, y0) * tx) * (1 - ty) +
                       (px(x0, y0 + 1) * (1 - tx) + px(x0 + 1, y0 + 1) * tx) * ty;
      out(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

GrayImage rotate(const GrayImage& img, double degrees) {
  if (!(std::abs(degrees) <= 15.0)) throw InvalidArgument("rotation must lie within [-15, 15] degrees");
  return rotate_any(img, degrees);
}

GrayImage flip(const GrayImage& img, Axis axis) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out(x, y) = axis == Axis::horizontal ? img(img.width() - 1 - x, y) : img(x, img.height() - 1 - y);
    }
  }
  return out;
}

GrayImage crop(const GrayImage& img, const Rect& r) {
  if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0 || r.x + r.w > img.width() || r.y + r.h > img.height()) {
    throw InvalidArgument("crop rectangle outside image");
  }
  GrayImage out(r.w, r.h);
  for (int y = 0; y < r.h; ++y) {
    for (int x = 0; x < r.w; ++x) out(x, y) = img(r.x + x, r.y + y);
  }
  return out;
}

Splits<std::size_t> split_indices(std::size_t n, std::array<double, 3> f, std::uint64_t seed) {
  for (double v : f) {
    if (!(v >= 0.0)) throw InvalidArgument("split fractions must be non-negative");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw InvalidArgument("split fractions must sum to 1");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  // A small epsilon keeps 10 * 0.2 from flooring to 1.
  const auto take = [n](double frac) { return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9)); };
  const std::size_t n_test = take(f[1]);
  const std::size_t n_val = take(f[2]);
  const std::size_t n_train = n - n_test - n_val;
  Splits<std::size_t> s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test), order.end());
  return s;
}

std::vector<LabeledImage> digit_samples(std::size_t n, std::uint64_t seed, const SampleSpec& spec) {
  Rng rng(seed);
  std::vector<LabeledImage> out;
  out.reserve(n);
  const int glyph_side = spec.side * 3 / 4;
  for (std::size_t i = 0; i < n; ++i) {
    const int d = static_cast<int>(i % 10);
    StrokeStyle style;
    style.size = glyph_side;
    style.thickness = rng.uniform(0.07, 0.13);
    style.jitter = spec.jitter;
    style.shear = rng.uniform(-0.15, 0.15);
    style.scale_x = rng.uniform(0.85, 1.1);
    style.scale_y = rng.uniform(0.9, 1.05);
    const BinaryImage glyph = render_digit(d, style, &rng);
    const auto ink = static_cast<std::uint8_t>(rng.uniform_int(0, 70));
    GrayImage canvas(spec.side, spec.side, 255);
    const int ox = (spec.side - glyph_side) / 2 + rng.uniform_int(-2, 2);
    const int oy = (spec.side - glyph_side) / 2 + rng.uniform_int(-2, 2);
    for (int y = 0; y < glyph_side; ++y) {
      for (int x = 0; x < glyph_side; ++x) {
        if (glyph(x, y) && canvas.contains(ox + x, oy + y)) canvas(ox + x, oy + y) = ink;
      }
    }
    const double angle = rng.uniform(-spec.max_rotation, spec.max_rotation);
    out.push_back({rotate_any(canvas, angle), d});
  }
  return out;
}

void write_samples(const std::vector<LabeledImage>& samples, const std::filesystem::path& dir,
                   const std::string& classes) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<csv::Row> rows{{"filename", "label"}};
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const std::string name = "glyph_" + std::to_string(k) + ".pgm";
    save_image(samples[k].image, dir / name);
    const auto label = static_cast<std::size_t>(samples[k].label);
    rows.push_back({name, label < classes.size() ? std::string(1, classes[label]) : std::to_string(label)});
  }
  csv::write(dir / "labels.csv", rows);
}

std::vector<LabeledImage> glyph_images(const GlyphSet& glyphs, int pad) {
  std::vector<LabeledImage> out;
  for (std::size_t k = 0; k < glyphs.by_class.size(); ++k) {
    for (const auto& g : glyphs.by_class[k]) {
      GrayImage canvas(g.width() + 2 * pad, g.height() + 2 * pad, 255);
      for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
          if (g(x, y)) canvas(x + pad, y + pad) = 0;
        }
      }
      out.push_back({std::move(canvas), static_cast<int>(k)});
    }
  }
  return out;
}

}  // namespace gridscan::datagen
