#include "gridscan/nn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace gridscan::nn {
namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32s(std::span<const float> vs) {
    for (float v : vs) u32(std::bit_cast<std::uint32_t>(v));
  }
  void dims(std::initializer_list<std::size_t> ds) {
    u32(static_cast<std::uint32_t>(ds.size()));
    for (auto d : ds) u32(static_cast<std::uint32_t>(d));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("weights file truncated");
  }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  void f32s(std::span<float> out) {
    need(out.size() * 4);
    for (auto& v : out) v = std::bit_cast<float>(u32());
  }
  std::vector<std::size_t> dims(std::uint32_t expect_rank, const char* kind) {
    const auto rank = u32();
    if (rank != expect_rank) {
      throw FormatError(std::string("weights file: ") + kind + " layer has rank " + std::to_string(rank));
    }
    std::vector<std::size_t> d(rank);
    for (auto& v : d) v = u32();
    return d;
  }
  bool done() const noexcept { return pos_ == b_.size(); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

constexpr std::uint32_t kMaxLayers = 4096;

}  // namespace

std::vector<std::uint8_t> encode_weights(const NetworkWeights& w) {
  w.arch.activation_shapes();
  Writer out;
  for (char c : kWeightsMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u32(static_cast<std::uint32_t>(w.arch.layers.size()));
  for (std::size_t i = 0; i < w.arch.layers.size(); ++i) {
    const auto& layer = w.arch.layers[i];
    out.u8(static_cast<std::uint8_t>(kind_of(layer)));
    if (const auto* c = std::get_if<Conv>(&layer)) {
      out.dims({c->out_ch, c->in_ch, c->kernel, c->kernel, c->stride, c->pad});
    } else if (const auto* m = std::get_if<MaxPool>(&layer)) {
      out.dims({m->kernel, m->stride});
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      out.dims({d->out, d->in});
    } else {
      out.u32(0);
    }
    if (has_params(layer)) {
      out.f32s(w.params.at(i).weight.data());
      out.f32s(w.params.at(i).bias.data());
    }
  }
  out.u32(static_cast<std::uint32_t>(w.arch.input.size()));
  for (auto d : w.arch.input) out.u32(static_cast<std::uint32_t>(d));
  out.u64(w.seed);
  return out.take();
}

NetworkWeights decode_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightsMagic, 4) != 0) {
    throw FormatError("weights file: bad magic (expected GSW1)");
  }
  Reader in(bytes.subspan(4));
  const auto count = in.u32();
  if (count > kMaxLayers) throw FormatError("weights file: implausible layer count");

  NetworkArch arch;
  arch.layers.reserve(count);
  std::vector<LayerParams<float>> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto tag = in.u8();
    switch (static_cast<LayerKind>(tag)) {
      case LayerKind::conv: {
        const auto d = in.dims(6, "conv");
        if (d[2] != d[3]) throw FormatError("weights file: non-square conv kernel");
        arch.layers.push_back(Conv{d[1], d[0], d[2], d[4], d[5]});
        break;
      }
      case LayerKind::relu:
        in.dims(0, "relu");
        arch.layers.push_back(Relu{});
        break;
      case LayerKind::maxpool: {
        const auto d = in.dims(2, "maxpool");
        arch.layers.push_back(MaxPool{d[0], d[1]});
        break;
      }
      case LayerKind::flatten:
        in.dims(0, "flatten");
        arch.layers.push_back(Flatten{});
        break;
      case LayerKind::dense: {
        const auto d = in.dims(2, "dense");
        arch.layers.push_back(Dense{d[1], d[0]});
        break;
      }
      default:
        throw FormatError("weights file: unknown layer tag " + std::to_string(tag));
    }
    LayerParams<float> p;
    if (has_params(arch.layers.back())) {
      auto [ws, bs] = param_shapes(arch.layers.back());
      in.need((shape_size(ws) + shape_size(bs)) * 4);
      p.weight = Tensor(std::move(ws));
      p.bias = Tensor(std::move(bs));
      in.f32s(p.weight.data());
      in.f32s(p.bias.data());
    }
    params.push_back(std::move(p));
  }
  const auto input_rank = in.u32();
  if (input_rank != 3) throw FormatError("weights file: input shape must have rank 3");
  arch.input.clear();
  for (std::uint32_t i = 0; i < input_rank; ++i) arch.input.push_back(in.u32());
  const auto seed = in.u64();
  if (!in.done()) throw FormatError("weights file: trailing bytes");
  try {
    arch.activation_shapes();
  } catch (const ShapeMismatch& e) {
    throw FormatError(std::string("weights file: inconsistent architecture: ") + e.what());
  }
  return NetworkWeights{std::move(arch), std::move(params), seed};
}

void save_weights(const NetworkWeights& w, const std::filesystem::path& path) {
  const auto bytes = encode_weights(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

NetworkWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

}  // namespace gridscan::nn
