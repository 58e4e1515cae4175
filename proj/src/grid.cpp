#include "gridscan/grid.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "gridscan/netpbm.hpp"

namespace gridscan {

std::vector<Component> connected_components(const BinaryImage& img) {
  const int w = img.width();
  const int h = img.height();
  std::vector<int> label(img.size(), -1);
  std::vector<Component> out;
  std::vector<std::pair<int, int>> stack;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      if (!img(x, y) || label[idx] >= 0) continue;
      const int id = static_cast<int>(out.size());
      int x0 = x, x1 = x, y0 = y, y1 = y, area = 0;
      label[idx] = id;
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (!img.contains(nx, ny) || !img(nx, ny)) continue;
            const auto n = static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nx);
            if (label[n] >= 0) continue;
            label[n] = id;
            stack.emplace_back(nx, ny);
          }
        }
      }
      out.push_back({{x0, y0, x1 - x0 + 1, y1 - y0 + 1}, area});
    }
  }
  // Raster-scan discovery order is already (top row, then leftmost pixel of
  // that row), but the leftmost pixel need not be the bbox origin.
  std::stable_sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
    return a.bbox.y != b.bbox.y ? a.bbox.y < b.bbox.y : a.bbox.x < b.bbox.x;
  });
  return out;
}

std::vector<int> column_positions(const BinaryImage& vert_mask, int min_height) {
  std::vector<int> xs;
  for (const auto& c : connected_components(vert_mask)) {
    if (c.bbox.h >= min_height) xs.push_back(c.bbox.x);
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

std::vector<int> row_positions(const BinaryImage& horiz_mask, int min_width) {
  std::vector<int> ys;
  for (const auto& c : connected_components(horiz_mask)) {
    if (c.bbox.w >= min_width) ys.push_back(c.bbox.y);
  }
  std::sort(ys.begin(), ys.end());
  return ys;
}

std::vector<int> group_positions(const std::vector<int>& positions, int min_gap) {
  if (!std::is_sorted(positions.begin(), positions.end())) {
    throw InvalidArgument("group_positions: input must be sorted ascending");
  }
  std::vector<int> kept;
  for (int p : positions) {
    if (kept.empty() || p - kept.back() > min_gap) kept.push_back(p);
  }
  return kept;
}

GridModel build_grid(std::vector<int> col_xs, std::vector<int> row_ys) {
  if (col_xs.size() < 2 || row_ys.size() < 2) {
    throw DegenerateGrid("no grid detected: need at least 2 column and 2 row lines, found " +
                         std::to_string(col_xs.size()) + " and " + std::to_string(row_ys.size()));
  }
  auto increasing = [](const std::vector<int>& v) {
    return std::adjacent_find(v.begin(), v.end(), [](int a, int b) { return b <= a; }) == v.end();
  };
  if (!increasing(col_xs) || !increasing(row_ys)) {
    throw InvalidArgument("build_grid: positions must be strictly increasing");
  }
  return {std::move(col_xs), std::move(row_ys)};
}

Rect cell_rect(const GridModel& grid, int row, int col, int inset) {
  const int x0 = grid.col_xs[static_cast<std::size_t>(col)];
  const int x1 = grid.col_xs[static_cast<std::size_t>(col) + 1];
  const int y0 = grid.row_ys[static_cast<std::size_t>(row)];
  const int y1 = grid.row_ys[static_cast<std::size_t>(row) + 1];
  const int ix = std::clamp(inset, 0, (x1 - x0 - 1) / 2);
  const int iy = std::clamp(inset, 0, (y1 - y0 - 1) / 2);
  return {x0 + ix, y0 + iy, x1 - x0 - 2 * ix, y1 - y0 - 2 * iy};
}

std::vector<CellRegion> extract_cells(const GrayImage& img, const GridModel& grid, int inset) {
  if (grid.rows() < 1 || grid.cols() < 1) throw DegenerateGrid("no grid detected");
  if (grid.col_xs.front() < 0 || grid.row_ys.front() < 0 || grid.col_xs.back() > img.width() ||
      grid.row_ys.back() > img.height()) {
    throw InvalidArgument("extract_cells: grid exceeds image bounds");
  }
  std::vector<CellRegion> cells;
  cells.reserve(static_cast<std::size_t>(grid.cell_count()));
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const Rect rect = cell_rect(grid, r, c, inset);
      GrayImage crop(rect.w, rect.h);
      for (int y = 0; y < rect.h; ++y) {
        for (int x = 0; x < rect.w; ++x) crop(x, y) = img(rect.x + x, rect.y + y);
      }
      cells.push_back({r, c, rect, std::move(crop)});
    }
  }
  return cells;
}

std::string cell_filename(int row, int col) {
  return "cell_" + std::to_string(row) + "_" + std::to_string(col) + ".pgm";
}

void save_cells(const std::vector<CellRegion>& cells, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& cell : cells) save_image(cell.image, dir / cell_filename(cell.row, cell.col));
}

RgbImage render_overlay(const GrayImage& img, const GridModel& grid) {
  RgbImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto v = img(x, y);
      out.set(x, y, {v, v, v});
    }
  }
  constexpr Rgb red{255, 0, 0};
  constexpr Rgb green{0, 255, 0};
  for (int x : grid.col_xs) {
    if (x < 0 || x >= img.width()) continue;
    for (int y = 0; y < img.height(); ++y) out.set(x, y, red);
  }
  for (int y : grid.row_ys) {
    if (y < 0 || y >= img.height()) continue;
    for (int x = 0; x < img.width(); ++x) out.set(x, y, green);
  }
  return out;
}

}  // namespace gridscan
