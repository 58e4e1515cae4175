#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gridscan {

enum class RecognizerKind { centroid, cnn };

/// Pipeline parameters. Defaults are the standard marksheet settings:
/// 1000x1000 canvas, 5x5 blur, 15 px threshold block with C = 8, 30 px
/// line kernels and grouping gap.
struct PipelineConfig {
  int resize_width = 1000;
  int resize_height = 1000;
  int blur_kernel = 5;
  int threshold_block = 15;
  double threshold_c = 8.0;
  int morph_length = 30;
  int group_gap = 30;
  int cell_inset = 2;
  // Line components shorter than this fraction of the longest line are
  // treated as handwriting rather than ruling.
  double line_fraction = 0.5;
  RecognizerKind recognizer = RecognizerKind::centroid;
  std::string weights;  // CNN weights file
  std::string glyphs;   // centroid glyph directory; empty = built-in digits
  double empty_threshold = 0.01;
  std::string classes = "0123456789";

  /// Throws ConfigError when a field is outside its valid range.
  void validate() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Applies `key = value` lines on top of `base`. '#' starts a comment.
/// Unknown keys and malformed values throw ConfigError.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});

/// Sets one field from its textual value.
void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value);

std::string format_config(const PipelineConfig& cfg);

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

const char* recognizer_name(RecognizerKind kind) noexcept;

}  // namespace gridscan
