#include "gridscan/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace gridscan {
namespace {

std::uint8_t clamp_round(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Counts of ones in every clipped window [i - before, i + after] along rows
// (horizontal == true) or columns. Returns the count and the window length
// that falls inside the image.
template <typename Emit>
void sliding_counts(const BinaryImage& img, int before, int after, bool horizontal, Emit&& emit) {
  const int outer = horizontal ? img.height() : img.width();
  const int inner = horizontal ? img.width() : img.height();
  std::vector<int> prefix(static_cast<std::size_t>(inner) + 1);
  for (int o = 0; o < outer; ++o) {
    prefix[0] = 0;
    for (int i = 0; i < inner; ++i) {
      const int v = horizontal ? img(i, o) : img(o, i);
      prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + v;
    }
    for (int i = 0; i < inner; ++i) {
      const int lo = std::max(0, i - before);
      const int hi = std::min(inner - 1, i + after);
      const int ones = prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)];
      const bool full = (i - before >= 0) && (i + after <= inner - 1) && ones == before + after + 1;
      if (horizontal) {
        emit(i, o, ones, full);
      } else {
        emit(o, i, ones, full);
      }
    }
  }
}

BinaryImage erode_axis(const BinaryImage& img, int length, bool horizontal) {
  if (length == 1) return img;
  BinaryImage out(img.width(), img.height());
  const int before = length / 2;
  const int after = length - 1 - before;
  sliding_counts(img, before, after, horizontal,
                 [&](int x, int y, int, bool full) { out(x, y) = full ? 1 : 0; });
  return out;
}

BinaryImage dilate_axis(const BinaryImage& img, int length, bool horizontal) {
  if (length == 1) return img;
  BinaryImage out(img.width(), img.height());
  // Dilation reflects the element: output(x) looks at x - (w-1-anchor) .. x + anchor.
  const int anchor = length / 2;
  const int before = length - 1 - anchor;
  const int after = anchor;
  sliding_counts(img, before, after, horizontal,
                 [&](int x, int y, int ones, bool) { out(x, y) = ones > 0 ? 1 : 0; });
  return out;
}

}  // namespace

StructuringElement::StructuringElement(int w, int h) : width(w), height(h) {
  if (w < 1 || h < 1) throw InvalidArgument("structuring element must be at least 1x1");
}

int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto c = img(x, y);
      out(x, y) = clamp_round(0.299 * c.r + 0.587 * c.g + 0.114 * c.b);
    }
  }
  return out;
}

GrayImage resize(const GrayImage& img, int out_width, int out_height) {
  if (out_width <= 0 || out_height <= 0) throw InvalidArgument("resize target must be positive");
  if (out_width == img.width() && out_height == img.height()) return img;

  struct Tap {
    int i0, i1;
    double t;
  };
  auto taps = [](int src, int dst) {
    std::vector<Tap> v(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int d = 0; d < dst; ++d) {
      const double s = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, src - 1);
      v[static_cast<std::size_t>(d)] = {i0, i1, s - i0};
    }
    return v;
  };
  const auto xs = taps(img.width(), out_width);
  const auto ys = taps(img.height(), out_height);

  GrayImage out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_width; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      const double top = img(tx.i0, ty.i0) * (1 - tx.t) + img(tx.i1, ty.i0) * tx.t;
      const double bottom = img(tx.i0, ty.i1) * (1 - tx.t) + img(tx.i1, ty.i1) * tx.t;
      out(x, y) = clamp_round(top * (1 - ty.t) + bottom * ty.t);
    }
  }
  return out;
}

std::array<double, 5> gaussian_taps_5() {
  std::array<double, 5> k{};
  double sum = 0;
  for (int i = 0; i < 5; ++i) {
    const double d = i - 2;
    k[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2 * kBlurSigma * kBlurSigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

GrayImage gaussian_blur_5x5(const GrayImage& img) {
  if (img.width() < 5 || img.height() < 5) throw InvalidArgument("gaussian_blur_5x5 needs at least 5x5 input");
  const auto k = gaussian_taps_5();
  const int w = img.width();
  const int h = img.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = 0; i < 5; ++i) acc += k[static_cast<std::size_t>(i)] * img(reflect_index(x + i - 2, w), y);
      tmp[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = acc;
    }
  }
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = 0; i < 5; ++i) {
        const int yy = reflect_index(y + i - 2, h);
        acc += k[static_cast<std::size_t>(i)] *
               tmp[static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
      }
      out(x, y) = clamp_round(acc);
    }
  }
  return out;
}

BinaryImage adaptive_threshold(const GrayImage& img, int block, double c) {
  if (block < 3 || block % 2 == 0) throw InvalidArgument("threshold block must be odd and >= 3");
  const int w = img.width();
  const int h = img.height();
  const int r = block / 2;
  const int pw = w + 2 * r;
  const int ph = h + 2 * r;

  // Integral image of the reflect-padded input, one extra leading row/col.
  std::vector<std::int64_t> sat(static_cast<std::size_t>(pw + 1) * static_cast<std::size_t>(ph + 1), 0);
  auto at = [&](int x, int y) -> std::int64_t& {
    return sat[static_cast<std::size_t>(y) * static_cast<std::size_t>(pw + 1) + static_cast<std::size_t>(x)];
  };
  for (int y = 0; y < ph; ++y) {
    const int sy = reflect_index(y - r, h);
    std::int64_t row = 0;
    for (int x = 0; x < pw; ++x) {
      row += img(reflect_index(x - r, w), sy);
      at(x + 1, y + 1) = at(x + 1, y) + row;
    }
  }

  const double area = static_cast<double>(block) * block;
  BinaryImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int64_t sum = at(x + block, y + block) - at(x, y + block) - at(x + block, y) + at(x, y);
      const double mean = static_cast<double>(sum) / area;
      out(x, y) = img(x, y) <= mean - c ? 1 : 0;
    }
  }
  return out;
}

BinaryImage erode(const BinaryImage& img, const StructuringElement& se) {
  return erode_axis(erode_axis(img, se.width, true), se.height, false);
}

BinaryImage dilate(const BinaryImage& img, const StructuringElement& se) {
  return dilate_axis(dilate_axis(img, se.width, true), se.height, false);
}

BinaryImage morph_open(const BinaryImage& img, const StructuringElement& se) {
  return dilate(erode(img, se), se);
}

BinaryImage combine_masks(const BinaryImage& a, const BinaryImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimMismatch("combine_masks: mask dimensions differ");
  }
  BinaryImage out(a.width(), a.height());
  auto pa = a.pixels();
  auto pb = b.pixels();
  auto po = out.pixels();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = (pa[i] | pb[i]) ? 1 : 0;
  return out;
}

}  // namespace gridscan
