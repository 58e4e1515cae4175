#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gridscan/nn/network.hpp"

namespace gridscan::nn {

// Weights file, all integers little-endian:
//   "GSW1"
//   u32 layer count
//   per layer: u8 kind tag, u32 rank, rank x u32 dims, f32 payload
//     conv    rank 6 [out, in, k, k, stride, pad]  payload out*in*k*k + out
//     relu    rank 0                               no payload
//     maxpool rank 2 [k, stride]                   no payload
//     flatten rank 0                               no payload
//     dense   rank 2 [out, in]                     payload out*in + out
//   u32 input rank, input dims (c, h, w)
//   u64 training seed
inline constexpr char kWeightsMagic[4] = {'G', 'S', 'W', '1'};

std::vector<std::uint8_t> encode_weights(const NetworkWeights& w);

/// Throws FormatError on bad magic, unknown tags, inconsistent shapes,
/// truncation or trailing bytes.
NetworkWeights decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const NetworkWeights& w, const std::filesystem::path& path);
NetworkWeights load_weights(const std::filesystem::path& path);

}  // namespace gridscan::nn
