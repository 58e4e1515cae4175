#include "gridscan/netpbm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "gridscan/preprocess.hpp"

namespace gridscan {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int read_uint(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw FormatError(std::string("netpbm: expected ") + what);
    }
    long long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > std::numeric_limits<int>::max()) throw FormatError(std::string("netpbm: ") + what + " too large");
      ++pos_;
    }
    return static_cast<int>(v);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("netpbm: missing whitespace after header");
    }
    ++pos_;
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::uint8_t> header(char kind, int w, int h) {
  const std::string s = std::string("P") + kind + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  return {s.begin(), s.end()};
}

}  // namespace

AnyImage decode_netpbm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("netpbm: unsupported magic (expected P5 or P6)");
  }
  const bool color = bytes[1] == '6';
  HeaderReader reader(bytes.subspan(2));
  const int w = reader.read_uint("width");
  const int h = reader.read_uint("height");
  const int maxval = reader.read_uint("maxval");
  if (w <= 0 || h <= 0) throw FormatError("netpbm: zero dimension");
  if (maxval != 255) throw FormatError("netpbm: maxval must be 255, got " + std::to_string(maxval));
  reader.end_header();

  const std::size_t offset = 2 + reader.position();
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * (color ? 3 : 1);
  if (bytes.size() - offset < count) throw FormatError("netpbm: truncated raster data");
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
  if (color) return RgbImage(w, h, std::move(data));
  return GrayImage(w, h, std::move(data));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  auto out = header('5', img.width(), img.height());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

std::vector<std::uint8_t> encode_pgm(const BinaryImage& img) {
  auto out = header('5', img.width(), img.height());
  out.reserve(out.size() + img.size());
  for (auto v : img.pixels()) out.push_back(v ? 255 : 0);
  return out;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  auto out = header('6', img.width(), img.height());
  out.insert(out.end(), img.bytes().begin(), img.bytes().end());
  return out;
}

AnyImage load_image(const std::filesystem::path& path) { return decode_netpbm(read_file(path)); }

GrayImage load_gray(const std::filesystem::path& path) {
  auto img = load_image(path);
  if (auto* rgb = std::get_if<RgbImage>(&img)) return to_grayscale(*rgb);
  return std::get<GrayImage>(std::move(img));
}

BinaryImage load_binary(const std::filesystem::path& path) {
  auto img = load_image(path);
  auto* gray = std::get_if<GrayImage>(&img);
  if (!gray) throw FormatError("expected a P5 mask: " + path.string());
  std::vector<std::uint8_t> bits;
  bits.reserve(gray->size());
  for (auto v : gray->pixels()) {
    if (v != 0 && v != 255) throw FormatError("mask contains values other than 0/255: " + path.string());
    bits.push_back(v ? 1 : 0);
  }
  return BinaryImage(gray->width(), gray->height(), std::move(bits));
}

void save_image(const GrayImage& img, const std::filesystem::path& path) { write_file(path, encode_pgm(img)); }
void save_image(const RgbImage& img, const std::filesystem::path& path) { write_file(path, encode_ppm(img)); }
void save_image(const BinaryImage& img, const std::filesystem::path& path) { write_file(path, encode_pgm(img)); }

}  // namespace gridscan
