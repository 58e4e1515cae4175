#pragma once

#include <array>

#include "gridscan/image.hpp"

namespace gridscan {

/// Rectangular all-ones structuring element anchored at (width/2, height/2).
struct StructuringElement {
  int width = 1;
  int height = 1;

  StructuringElement(int w, int h);
  static StructuringElement vertical(int length) { return {1, length}; }
  static StructuringElement horizontal(int length) { return {length, 1}; }
};

/// round(0.299 r + 0.587 g + 0.114 b) per pixel.
GrayImage to_grayscale(const RgbImage& img);

/// Bilinear resample with edge clamping (pixel-centre aligned).
GrayImage resize(const GrayImage& img, int out_width = 1000, int out_height = 1000);

inline constexpr double kBlurSigma = 1.1;

/// Normalised 1-D taps of the separable 5x5 Gaussian (sigma 1.1).
std::array<double, 5> gaussian_taps_5();

/// Separable 5x5 Gaussian blur with reflected borders. Needs both dims >= 5.
GrayImage gaussian_blur_5x5(const GrayImage& img);

/// Inverse-binary mean threshold: foreground iff value <= local mean - c.
/// The mean runs over a block x block window with reflected borders.
BinaryImage adaptive_threshold(const GrayImage& img, int block = 15, double c = 8.0);

// Out-of-image pixels count as 0 for both operators.
BinaryImage erode(const BinaryImage& img, const StructuringElement& se);
BinaryImage dilate(const BinaryImage& img, const StructuringElement& se);

/// dilate(erode(img)). With 1xL keeps vertical runs of length >= L.
BinaryImage morph_open(const BinaryImage& img, const StructuringElement& se);

/// Pointwise OR of two equally sized masks. Throws DimMismatch.
BinaryImage combine_masks(const BinaryImage& a, const BinaryImage& b);

/// Reflect-101 index mapping (…2 1 | 0 1 2 … n-1 | n-2 …) for any offset.
int reflect_index(int i, int n) noexcept;

}  // namespace gridscan
