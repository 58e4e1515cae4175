#include "gridscan/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "gridscan/datagen.hpp"
#include "gridscan/nn/serialize.hpp"
#include "gridscan/preprocess.hpp"

namespace gridscan {
namespace {

int extent_threshold(const std::vector<Component>& comps, bool vertical, const PipelineConfig& cfg) {
  int longest = 0;
  for (const auto& c : comps) longest = std::max(longest, vertical ? c.bbox.h : c.bbox.w);
  return std::max(cfg.morph_length, static_cast<int>(std::ceil(cfg.line_fraction * longest)));
}

std::vector<int> map_positions(const std::vector<int>& ps, int dst, int src) {
  std::vector<int> out;
  out.reserve(ps.size());
  for (int p : ps) out.push_back(map_position(p, dst, src));
  return out;
}

}  // namespace

int map_position(int p, int dst, int src) noexcept {
  const double s = (p + 0.5) * static_cast<double>(src) / dst - 0.5;
  return std::clamp(static_cast<int>(std::lround(s)), 0, src - 1);
}

CellPrepConfig prep_config(const PipelineConfig& cfg) {
  return {cfg.empty_threshold, cfg.threshold_block, cfg.threshold_c};
}

GridDetection detect_grid(const GrayImage& input, const PipelineConfig& cfg) {
  cfg.validate();
  GridDetection d;
  d.resized = resize(input, cfg.resize_width, cfg.resize_height);
  const BinaryImage mask = adaptive_threshold(gaussian_blur_5x5(d.resized), cfg.threshold_block, cfg.threshold_c);
  d.vertical = morph_open(mask, StructuringElement::vertical(cfg.morph_length));
  d.horizontal = morph_open(mask, StructuringElement::horizontal(cfg.morph_length));

  const auto vcomps = connected_components(d.vertical);
  const auto hcomps = connected_components(d.horizontal);
  d.raw_cols = column_positions(d.vertical, extent_threshold(vcomps, true, cfg));
  d.raw_rows = row_positions(d.horizontal, extent_threshold(hcomps, false, cfg));
  d.grid = build_grid(group_positions(d.raw_cols, cfg.group_gap), group_positions(d.raw_rows, cfg.group_gap));
  d.source_grid = build_grid(map_positions(d.grid.col_xs, cfg.resize_width, input.width()),
                             map_positions(d.grid.row_ys, cfg.resize_height, input.height()));
  return d;
}

Digitized digitize(const GrayImage& input, const PipelineConfig& cfg, const Recognizer& recognizer) {
  Digitized out;
  out.detection = detect_grid(input, cfg);
  const auto& grid = out.detection.source_grid;
  out.cells = extract_cells(input, grid, cfg.cell_inset);
  out.table = eval::Table(static_cast<std::size_t>(grid.rows()), static_cast<std::size_t>(grid.cols()));
  const auto prep = prep_config(cfg);
  out.predictions.reserve(out.cells.size());
  for (const auto& cell : out.cells) {
    const auto p = predict_cell(recognizer, cell, prep);
    out.table.at(static_cast<std::size_t>(cell.row), static_cast<std::size_t>(cell.col)) = label_text(p, cfg.classes);
    out.predictions.push_back(p);
  }
  return out;
}

CentroidModel builtin_centroid_model(const CellPrepConfig& prep) {
  return centroid_fit(to_examples(datagen::glyph_images(datagen::builtin_glyphs()), prep));
}

std::unique_ptr<Recognizer> make_recognizer(const PipelineConfig& cfg) {
  const auto prep = prep_config(cfg);
  if (cfg.recognizer == RecognizerKind::cnn) {
    if (cfg.weights.empty()) throw ConfigError("the cnn recognizer needs a weights file");
    return std::make_unique<CnnRecognizer>(nn::load_weights(cfg.weights));
  }
  if (cfg.glyphs.empty()) return std::make_unique<CentroidModel>(builtin_centroid_model(prep));
  const auto glyphs = datagen::load_glyph_dir(cfg.glyphs, cfg.classes);
  return std::make_unique<CentroidModel>(
      centroid_fit(to_examples(datagen::glyph_images(glyphs), prep), glyphs.num_classes()));
}

}  // namespace gridscan
