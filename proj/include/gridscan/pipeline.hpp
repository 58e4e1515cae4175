#pragma once

#include <memory>
#include <vector>

#include "gridscan/config.hpp"
#include "gridscan/eval.hpp"
#include "gridscan/grid.hpp"
#include "gridscan/image.hpp"
#include "gridscan/recognizer.hpp"

namespace gridscan {

struct GridDetection {
  GrayImage resized;
  BinaryImage vertical;    // opened with the 1 x morph_length element
  BinaryImage horizontal;  // opened with the morph_length x 1 element
  std::vector<int> raw_cols, raw_rows;
  GridModel grid;         // in the resized frame
  GridModel source_grid;  // the same lines in input pixel coordinates
};

/// Maps a position on a `dst`-pixel axis back onto a `src`-pixel axis
/// (pixel-centre alignment, the inverse of the resize sampling).
int map_position(int p, int dst, int src) noexcept;

/// resize -> blur -> adaptive threshold -> line openings -> positions ->
/// grouping. Throws DegenerateGrid when fewer than two lines survive on
/// either axis.
GridDetection detect_grid(const GrayImage& input, const PipelineConfig& cfg);

struct Digitized {
  GridDetection detection;
  std::vector<CellRegion> cells;
  std::vector<Prediction> predictions;  // parallel to cells
  eval::Table table;
};

/// Cells are cropped from the input image using `source_grid`, so glyphs
/// keep their aspect ratio whatever the page shape.
Digitized digitize(const GrayImage& input, const PipelineConfig& cfg, const Recognizer& recognizer);

/// Builds the recogniser named by the config: the CNN from its weights file,
/// or a centroid model fitted on the configured (or built-in) glyph set.
std::unique_ptr<Recognizer> make_recognizer(const PipelineConfig& cfg);

/// Centroid model fitted on every glyph of the built-in digit set.
CentroidModel builtin_centroid_model(const CellPrepConfig& prep = {});

CellPrepConfig prep_config(const PipelineConfig& cfg);

}  // namespace gridscan
