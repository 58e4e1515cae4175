#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridscan/grid.hpp"
#include "gridscan/image.hpp"
#include "gridscan/nn/network.hpp"

namespace gridscan {

struct Prediction {
  int label = -1;
  double confidence = 0.0;
  bool is_empty = true;
};

inline constexpr double kEmptyThreshold = 0.01;
inline const std::string kDigitClasses = "0123456789";

struct CellPrepConfig {
  double empty_threshold = kEmptyThreshold;  // minimum ink fraction of the cell
  int block = 15;
  double c = 8.0;
};

/// Binarises a cell, discards ink touching the crop border (residual grid
/// lines), and returns the normalised 32x32 classifier input (ink = 1), or
/// nullopt when the remaining ink fraction is below the empty threshold.
std::optional<std::vector<float>> prepare_cell(const GrayImage& cell, const CellPrepConfig& cfg = {});

/// Same normalisation for a glyph or training image; never reports empty
/// (an inkless image is resampled whole).
std::vector<float> normalize_glyph(const GrayImage& img, const CellPrepConfig& cfg = {});

/// Classifies prepared 32x32 inputs.
class Recognizer {
 public:
  virtual ~Recognizer() = default;
  virtual Prediction classify(std::span<const float> input) const = 0;
};

/// Empty detection followed by classification.
Prediction predict_cell(const Recognizer& recognizer, const GrayImage& cell, const CellPrepConfig& cfg = {});
inline Prediction predict_cell(const Recognizer& recognizer, const CellRegion& cell, const CellPrepConfig& cfg = {}) {
  return predict_cell(recognizer, cell.image, cfg);
}

/// Nearest-centroid baseline over normalised inputs.
class CentroidModel final : public Recognizer {
 public:
  CentroidModel(std::vector<std::vector<float>> centroids, std::vector<bool> present);

  /// Distance ties resolve to the lowest class id. Confidence is the softmax
  /// of negative distances at the winning class.
  Prediction classify(std::span<const float> input) const override;

  std::size_t num_classes() const noexcept { return centroids_.size(); }
  const std::vector<float>& centroid(std::size_t cls) const { return centroids_.at(cls); }
  bool has_class(std::size_t cls) const { return present_.at(cls); }

 private:
  std::vector<std::vector<float>> centroids_;
  std::vector<bool> present_;
};

/// Per-class means. Throws EmptyDataset.
CentroidModel centroid_fit(const std::vector<nn::Example>& examples, std::size_t num_classes = nn::kDefaultClasses);

inline Prediction centroid_predict(const CentroidModel& model, const GrayImage& cell, const CellPrepConfig& cfg = {}) {
  return predict_cell(model, cell, cfg);
}

/// CNN classifier wrapper; immutable after construction, so one instance
/// may serve many threads.
class CnnRecognizer final : public Recognizer {
 public:
  explicit CnnRecognizer(nn::NetworkWeights weights);
  Prediction classify(std::span<const float> input) const override;
  const nn::NetworkWeights& weights() const noexcept { return weights_; }

 private:
  nn::NetworkWeights weights_;
};

/// Maps a class id to its symbol in `classes` ("" for empty predictions).
std::string label_text(const Prediction& p, const std::string& classes = kDigitClasses);

/// Index of `text` in `classes`; throws FormatError if absent.
int class_index(const std::string& text, const std::string& classes = kDigitClasses);

struct LabeledImage {
  GrayImage image;
  int label = 0;
};

/// Reads `filename,label` rows from `labels_csv`; filenames are relative to
/// `dir`. A first row of exactly "filename,label" is treated as a header.
std::vector<LabeledImage> load_labeled_dir(const std::filesystem::path& dir, const std::filesystem::path& labels_csv,
                                           const std::string& classes = kDigitClasses);

std::vector<nn::Example> to_examples(const std::vector<LabeledImage>& images, const CellPrepConfig& cfg = {});

}  // namespace gridscan
