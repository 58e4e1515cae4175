#pragma once

#include <filesystem>
#include <variant>

#include "gridscan/image.hpp"

namespace gridscan {

using AnyImage = std::variant<GrayImage, RgbImage>;

/// Decodes a binary PGM (P5) or PPM (P6) file with maxval 255.
/// Header comments are skipped. Throws IoError or FormatError.
AnyImage load_image(const std::filesystem::path& path);

/// Loads a P5 or P6 file and converts colour input to luma.
GrayImage load_gray(const std::filesystem::path& path);

/// Loads a P5 mask written by save_image(BinaryImage). Only 0 and 255 are
/// accepted.
BinaryImage load_binary(const std::filesystem::path& path);

// Writers never emit header comments. Binary masks are written as P5 with
// foreground 255.
void save_image(const GrayImage& img, const std::filesystem::path& path);
void save_image(const RgbImage& img, const std::filesystem::path& path);
void save_image(const BinaryImage& img, const std::filesystem::path& path);

// In-memory codecs used by the file functions.
AnyImage decode_netpbm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
std::vector<std::uint8_t> encode_pgm(const BinaryImage& img);
std::vector<std::uint8_t> encode_ppm(const RgbImage& img);

}  // namespace gridscan
