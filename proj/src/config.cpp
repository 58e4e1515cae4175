#include "gridscan/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "gridscan/error.hpp"

namespace gridscan {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) {
    throw ConfigError("config: invalid value '" + std::string(v) + "' for " + std::string(key));
  }
  return out;
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void check(bool ok, const char* msg) {
  if (!ok) throw ConfigError(std::string("config: ") + msg);
}

}  // namespace

const char* recognizer_name(RecognizerKind kind) noexcept {
  return kind == RecognizerKind::cnn ? "cnn" : "centroid";
}

void PipelineConfig::validate() const {
  check(resize_width >= 32 && resize_width <= 8000, "resize_width must be in [32, 8000]");
  check(resize_height >= 32 && resize_height <= 8000, "resize_height must be in [32, 8000]");
  check(blur_kernel == 5, "blur_kernel must be 5");
  check(threshold_block >= 3 && threshold_block <= 255 && threshold_block % 2 == 1,
        "threshold_block must be odd and in [3, 255]");
  check(threshold_c >= 0 && threshold_c <= 255, "threshold_c must be in [0, 255]");
  check(morph_length >= 1 && morph_length <= 1000, "morph_length must be in [1, 1000]");
  check(group_gap >= 0 && group_gap <= 1000, "group_gap must be in [0, 1000]");
  check(cell_inset >= 0 && cell_inset <= 50, "cell_inset must be in [0, 50]");
  check(line_fraction >= 0 && line_fraction <= 1, "line_fraction must be in [0, 1]");
  check(empty_threshold >= 0 && empty_threshold <= 1, "empty_threshold must be in [0, 1]");
  check(!classes.empty(), "classes must not be empty");
  check(classes.find_first_of(" ,\"\t") == std::string::npos, "classes may not contain spaces, commas or quotes");
}

void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "resize_width") cfg.resize_width = parse_number<int>(key, value);
  else if (key == "resize_height") cfg.resize_height = parse_number<int>(key, value);
  else if (key == "blur_kernel") cfg.blur_kernel = parse_number<int>(key, value);
  else if (key == "threshold_block") cfg.threshold_block = parse_number<int>(key, value);
  else if (key == "threshold_c") cfg.threshold_c = parse_number<double>(key, value);
  else if (key == "morph_length") cfg.morph_length = parse_number<int>(key, value);
  else if (key == "group_gap") cfg.group_gap = parse_number<int>(key, value);
  else if (key == "cell_inset") cfg.cell_inset = parse_number<int>(key, value);
  else if (key == "line_fraction") cfg.line_fraction = parse_number<double>(key, value);
  else if (key == "empty_threshold") cfg.empty_threshold = parse_number<double>(key, value);
  else if (key == "weights") cfg.weights = std::string(value);
  else if (key == "glyphs") cfg.glyphs = std::string(value);
  else if (key == "classes") cfg.classes = std::string(value);
  else if (key == "recognizer") {
    if (value == "cnn") cfg.recognizer = RecognizerKind::cnn;
    else if (value == "centroid") cfg.recognizer = RecognizerKind::centroid;
    else throw ConfigError("config: recognizer must be cnn or centroid, got '" + std::string(value) + "'");
  } else {
    throw ConfigError("config: unknown key '" + std::string(key) + "'");
  }
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  base.validate();
  return base;
}

std::string format_config(const PipelineConfig& c) {
  std::ostringstream os;
  os << "resize_width = " << c.resize_width << '\n'
     << "resize_height = " << c.resize_height << '\n'
     << "blur_kernel = " << c.blur_kernel << '\n'
     << "threshold_block = " << c.threshold_block << '\n'
     << "threshold_c = " << shortest(c.threshold_c) << '\n'
     << "morph_length = " << c.morph_length << '\n'
     << "group_gap = " << c.group_gap << '\n'
     << "cell_inset = " << c.cell_inset << '\n'
     << "line_fraction = " << shortest(c.line_fraction) << '\n'
     << "recognizer = " << recognizer_name(c.recognizer) << '\n'
     << "weights = " << c.weights << '\n'
     << "glyphs = " << c.glyphs << '\n'
     << "empty_threshold = " << shortest(c.empty_threshold) << '\n'
     << "classes = " << c.classes << '\n';
  return os.str();
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace gridscan
