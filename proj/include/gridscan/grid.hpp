#pragma once

#include <filesystem>
#include <vector>

#include "gridscan/image.hpp"

namespace gridscan {

/// 8-connected foreground blob: tight bounding box plus pixel count.
struct Component {
  Rect bbox;
  int area = 0;
  friend bool operator==(const Component&, const Component&) = default;
};

/// Labels 8-connected foreground components. Output is sorted by bbox
/// origin (y, then x).
std::vector<Component> connected_components(const BinaryImage& img);

inline constexpr int kMinLineExtent = 30;
inline constexpr int kGroupGap = 30;

/// Sorted left edges of vertical-line components at least `min_height` tall.
std::vector<int> column_positions(const BinaryImage& vert_mask, int min_height = kMinLineExtent);

/// Sorted top edges of horizontal-line components at least `min_width` wide.
std::vector<int> row_positions(const BinaryImage& horiz_mask, int min_width = kMinLineExtent);

/// Greedy single pass: keep the first position, then every position more
/// than `min_gap` beyond the last one kept. Throws InvalidArgument on
/// unsorted input.
std::vector<int> group_positions(const std::vector<int>& positions, int min_gap = kGroupGap);

/// Column x-positions and row y-positions bounding the table cells.
struct GridModel {
  std::vector<int> col_xs;
  std::vector<int> row_ys;

  int rows() const noexcept { return row_ys.size() < 2 ? 0 : static_cast<int>(row_ys.size()) - 1; }
  int cols() const noexcept { return col_xs.size() < 2 ? 0 : static_cast<int>(col_xs.size()) - 1; }
  int cell_count() const noexcept { return rows() * cols(); }

  friend bool operator==(const GridModel&, const GridModel&) = default;
};

/// Throws DegenerateGrid when either axis has fewer than two lines.
GridModel build_grid(std::vector<int> col_xs, std::vector<int> row_ys);

struct CellRegion {
  int row = 0;
  int col = 0;
  Rect rect;
  GrayImage image;
};

inline constexpr int kDefaultCellInset = 2;

/// Crop rectangle of cell (row, col) after shaving `inset` pixels per side.
/// The inset is clamped so the rectangle keeps at least one pixel.
Rect cell_rect(const GridModel& grid, int row, int col, int inset = kDefaultCellInset);

/// Crops every cell in row-major order. Throws DegenerateGrid, or
/// InvalidArgument when the grid lies outside the image.
std::vector<CellRegion> extract_cells(const GrayImage& img, const GridModel& grid,
                                      int inset = kDefaultCellInset);

/// "cell_<row>_<col>.pgm"
std::string cell_filename(int row, int col);

/// Writes one PGM per cell into `dir` (created if missing).
void save_cells(const std::vector<CellRegion>& cells, const std::filesystem::path& dir);

/// Grayscale copy with red column lines and green row lines (rows on top).
RgbImage render_overlay(const GrayImage& img, const GridModel& grid);

}  // namespace gridscan
