#include "gridscan/recognizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridscan/csv.hpp"
#include "gridscan/netpbm.hpp"
#include "gridscan/preprocess.hpp"

namespace gridscan {
namespace {

constexpr int kSide = static_cast<int>(nn::kInputSide);
// The glyph's longer side fills this many of the kSide output pixels.
constexpr double kGlyphSpan = 26.0;
constexpr int kSuper = 4;

double bilinear(const std::vector<double>& ink, int w, int h, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double tx = x - x0;
  const double ty = y - y0;
  auto at = [&](int xx, int yy) { return ink[static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(xx)]; };
  return (at(x0, y0) * (1 - tx) + at(x1, y0) * tx) * (1 - ty) + (at(x0, y1) * (1 - tx) + at(x1, y1) * tx) * ty;
}

// Maps the ink inside `box` onto a kSide x kSide canvas, centred, longer
// side spanning kGlyphSpan pixels, supersampled for anti-aliasing.
std::vector<float> render_input(const GrayImage& img, Rect box) {
  std::vector<double> ink(static_cast<std::size_t>(box.w) * static_cast<std::size_t>(box.h));
  for (int y = 0; y < box.h; ++y) {
    for (int x = 0; x < box.w; ++x) {
      ink[static_cast<std::size_t>(y) * static_cast<std::size_t>(box.w) + static_cast<std::size_t>(x)] =
          (255.0 - img(box.x + x, box.y + y)) / 255.0;
    }
  }
  const double scale = std::max(box.w, box.h) / kGlyphSpan;  // source pixels per output pixel
  const double cx = (box.w - 1) / 2.0;
  const double cy = (box.h - 1) / 2.0;
  std::vector<float> out(static_cast<std::size_t>(kSide) * kSide);
  for (int oy = 0; oy < kSide; ++oy) {
    for (int ox = 0; ox < kSide; ++ox) {
      double acc = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double px = ox + (sx + 0.5) / kSuper - kSide / 2.0;
          const double py = oy + (sy + 0.5) / kSuper - kSide / 2.0;
          const double x = cx + px * scale;
          const double y = cy + py * scale;
          if (x < -0.5 || y < -0.5 || x > box.w - 0.5 || y > box.h - 0.5) continue;
          acc += bilinear(ink, box.w, box.h, x, y);
        }
      }
      out[static_cast<std::size_t>(oy) * kSide + static_cast<std::size_t>(ox)] =
          static_cast<float>(std::clamp(acc / (kSuper * kSuper), 0.0, 1.0));
    }
  }
  return out;
}

struct InkScan {
  Rect bbox;
  std::size_t ink = 0;
};

// Ink components that do not touch the crop border; their union bbox.
InkScan scan_ink(const GrayImage& cell, const CellPrepConfig& cfg) {
  const BinaryImage mask = adaptive_threshold(cell, cfg.block, cfg.c);
  InkScan scan;
  int x0 = cell.width(), y0 = cell.height(), x1 = -1, y1 = -1;
  for (const auto& comp : connected_components(mask)) {
    const auto& b = comp.bbox;
    if (b.x == 0 || b.y == 0 || b.x + b.w == cell.width() || b.y + b.h == cell.height()) continue;
    scan.ink += static_cast<std::size_t>(comp.area);
    x0 = std::min(x0, b.x);
    y0 = std::min(y0, b.y);
    x1 = std::max(x1, b.x + b.w);
    y1 = std::max(y1, b.y + b.h);
  }
  if (x1 >= 0) scan.bbox = {x0, y0, x1 - x0, y1 - y0};
  return scan;
}

}  // namespace

std::optional<std::vector<float>> prepare_cell(const GrayImage& cell, const CellPrepConfig& cfg) {
  if (cell.empty()) return std::nullopt;
  const auto scan = scan_ink(cell, cfg);
  const double fraction = static_cast<double>(scan.ink) / static_cast<double>(cell.size());
  if (scan.ink == 0 || fraction < cfg.empty_threshold) return std::nullopt;
  return render_input(cell, scan.bbox);
}

std::vector<float> normalize_glyph(const GrayImage& img, const CellPrepConfig& cfg) {
  const auto scan = scan_ink(img, cfg);
  if (scan.ink == 0) return render_input(img, {0, 0, img.width(), img.height()});
  return render_input(img, scan.bbox);
}

Prediction predict_cell(const Recognizer& recognizer, const GrayImage& cell, const CellPrepConfig& cfg) {
  const auto input = prepare_cell(cell, cfg);
  if (!input) return {};
  return recognizer.classify(*input);
}

CentroidModel::CentroidModel(std::vector<std::vector<float>> centroids, std::vector<bool> present)
    : centroids_(std::move(centroids)), present_(std::move(present)) {
  if (centroids_.size() != present_.size()) throw InvalidArgument("centroid/presence count mismatch");
  if (std::none_of(present_.begin(), present_.end(), [](bool b) { return b; })) {
    throw EmptyDataset("centroid model has no classes");
  }
}

Prediction CentroidModel::classify(std::span<const float> input) const {
  std::vector<double> dist(centroids_.size(), std::numeric_limits<double>::infinity());
  int best = -1;
  for (std::size_t k = 0; k < centroids_.size(); ++k) {
    if (!present_[k]) continue;
    const auto& c = centroids_[k];
    if (c.size() != input.size()) throw ShapeMismatch("centroid input length mismatch");
    double d2 = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double d = static_cast<double>(input[i]) - c[i];
      d2 += d * d;
    }
    dist[k] = std::sqrt(d2);
    if (best < 0 || dist[k] < dist[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  // softmax(-d) evaluated at the argmin, shifted by the minimum for stability
  const double dmin = dist[static_cast<std::size_t>(best)];
  double z = 0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    if (present_[k]) z += std::exp(-(dist[k] - dmin));
  }
  return {best, 1.0 / z, false};
}

CentroidModel centroid_fit(const std::vector<nn::Example>& examples, std::size_t num_classes) {
  if (examples.empty()) throw EmptyDataset("centroid_fit: no examples");
  const std::size_t dim = examples.front().input.size();
  std::vector<std::vector<double>> sums(num_classes, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& ex : examples) {
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= num_classes) {
      throw InvalidArgument("centroid_fit: label out of range");
    }
    if (ex.input.size() != dim) throw ShapeMismatch("centroid_fit: inconsistent input length");
    auto& s = sums[static_cast<std::size_t>(ex.label)];
    for (std::size_t i = 0; i < dim; ++i) s[i] += ex.input[i];
    ++counts[static_cast<std::size_t>(ex.label)];
  }
  std::vector<std::vector<float>> centroids(num_classes, std::vector<float>(dim, 0.0f));
  std::vector<bool> present(num_classes, false);
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (counts[k] == 0) continue;
    present[k] = true;
    for (std::size_t i = 0; i < dim; ++i) centroids[k][i] = static_cast<float>(sums[k][i] / static_cast<double>(counts[k]));
  }
  return CentroidModel(std::move(centroids), std::move(present));
}

CnnRecognizer::CnnRecognizer(nn::NetworkWeights weights) : weights_(std::move(weights)) {
  const auto& in = weights_.arch.input;
  if (in != nn::Shape{1, nn::kInputSide, nn::kInputSide}) {
    throw ShapeMismatch("cnn recognizer expects a 1x32x32 input network");
  }
  weights_.arch.activation_shapes();
}

Prediction CnnRecognizer::classify(std::span<const float> input) const {
  nn::Tensor x({1, 1, nn::kInputSide, nn::kInputSide}, std::vector<float>(input.begin(), input.end()));
  const auto probs = nn::softmax(nn::forward(weights_, x));
  const auto row = probs.data();
  const auto best = std::max_element(row.begin(), row.end());
  return {static_cast<int>(best - row.begin()), static_cast<double>(*best), false};
}

std::string label_text(const Prediction& p, const std::string& classes) {
  if (p.is_empty || p.label < 0) return {};
  if (static_cast<std::size_t>(p.label) >= classes.size()) return std::to_string(p.label);
  return std::string(1, classes[static_cast<std::size_t>(p.label)]);
}

int class_index(const std::string& text, const std::string& classes) {
  if (text.size() == 1) {
    const auto pos = classes.find(text[0]);
    if (pos != std::string::npos) return static_cast<int>(pos);
  }
  throw FormatError("unknown class label '" + text + "'");
}

std::vector<LabeledImage> load_labeled_dir(const std::filesystem::path& dir, const std::filesystem::path& labels_csv,
                                           const std::string& classes) {
  auto rows = csv::read(labels_csv);
  if (!rows.empty() && rows.front() == csv::Row{"filename", "label"}) rows.erase(rows.begin());
  std::vector<LabeledImage> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() != 2) throw FormatError("labels csv: expected filename,label rows");
    out.push_back({load_gray(dir / r[0]), class_index(r[1], classes)});
  }
  if (out.empty()) throw EmptyDataset("labels csv lists no samples: " + labels_csv.string());
  return out;
}

std::vector<nn::Example> to_examples(const std::vector<LabeledImage>& images, const CellPrepConfig& cfg) {
  std::vector<nn::Example> out;
  out.reserve(images.size());
  for (const auto& li : images) out.push_back({normalize_glyph(li.image, cfg), li.label});
  return out;
}

}  // namespace gridscan
