#include "gridscan/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gridscan/rng.hpp"

namespace gridscan::nn {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

LayerKind kind_of(const LayerSpec& layer) noexcept {
  return static_cast<LayerKind>(layer.index() + 1);
}

const char* kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
  }
  return "?";
}

bool has_params(const LayerSpec& layer) noexcept {
  return std::holds_alternative<Conv>(layer) || std::holds_alternative<Dense>(layer);
}

NetworkArch NetworkArch::classifier(std::size_t num_classes) {
  NetworkArch a;
  a.layers = {
      Conv{1, 16, 3, 1, 1},  Relu{}, Conv{16, 32, 3, 1, 1}, Relu{}, MaxPool{2, 2}, Conv{32, 64, 3, 2, 1},
      Relu{},                Flatten{}, Dense{64 * 8 * 8, 128}, Relu{}, Dense{128, num_classes},
  };
  return a;
}

std::vector<Shape> NetworkArch::activation_shapes() const {
  std::vector<Shape> shapes{input};
  Shape cur = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "layer " + std::to_string(i) + " (" + kind_name(kind_of(layers[i])) + "): ";
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv>) {
            if (cur.size() != 3 || cur[0] != l.in_ch || l.kernel == 0 || l.stride == 0 || l.out_ch == 0) {
              throw ShapeMismatch(where + "expects " + std::to_string(l.in_ch) + " channels, got " + shape_str(cur));
            }
            cur = {l.out_ch, conv_out_extent(cur[1], l.kernel, l.stride, l.pad),
                   conv_out_extent(cur[2], l.kernel, l.stride, l.pad)};
          } else if constexpr (std::is_same_v<L, MaxPool>) {
            if (cur.size() != 3 || l.kernel == 0 || l.stride == 0) throw ShapeMismatch(where + "expects a feature map");
            cur = {cur[0], conv_out_extent(cur[1], l.kernel, l.stride, 0),
                   conv_out_extent(cur[2], l.kernel, l.stride, 0)};
          } else if constexpr (std::is_same_v<L, Flatten>) {
            cur = {shape_size(cur)};
          } else if constexpr (std::is_same_v<L, Dense>) {
            if (cur.size() != 1 || cur[0] != l.in || l.out == 0) {
              throw ShapeMismatch(where + "expects a vector of " + std::to_string(l.in) + ", got " + shape_str(cur));
            }
            cur = {l.out};
          }
        },
        layers[i]);
    shapes.push_back(cur);
  }
  if (cur.size() != 1) throw ShapeMismatch("network must end in a logits vector, ends in " + shape_str(cur));
  return shapes;
}

std::size_t NetworkArch::num_classes() const { return activation_shapes().back()[0]; }

std::string NetworkArch::describe() const {
  std::ostringstream os;
  os << "in" << shape_str(input);
  for (const auto& layer : layers) {
    os << '|';
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv>) {
            os << "conv" << l.in_ch << '-' << l.out_ch << 'k' << l.kernel << 's' << l.stride << 'p' << l.pad;
          } else if constexpr (std::is_same_v<L, Relu>) {
            os << "relu";
          } else if constexpr (std::is_same_v<L, MaxPool>) {
            os << "maxpool" << 'k' << l.kernel << 's' << l.stride;
          } else if constexpr (std::is_same_v<L, Flatten>) {
            os << "flatten";
          } else {
            os << "dense" << l.in << '-' << l.out;
          }
        },
        layer);
  }
  return os.str();
}

std::uint64_t NetworkArch::fingerprint() const {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : describe()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::pair<Shape, Shape> param_shapes(const LayerSpec& layer) {
  if (const auto* c = std::get_if<Conv>(&layer)) {
    return {{c->out_ch, c->in_ch, c->kernel, c->kernel}, {c->out_ch}};
  }
  if (const auto* d = std::get_if<Dense>(&layer)) return {{d->out, d->in}, {d->out}};
  return {{}, {}};
}

NetworkWeights zero_weights(const NetworkArch& arch) {
  arch.activation_shapes();
  NetworkWeights w{arch, {}, 0};
  for (const auto& layer : arch.layers) {
    if (!has_params(layer)) {
      w.params.push_back({});
      continue;
    }
    auto [ws, bs] = param_shapes(layer);
    w.params.push_back({Tensor(std::move(ws)), Tensor(std::move(bs))});
  }
  return w;
}

NetworkWeights init_weights(const NetworkArch& arch, std::uint64_t seed) {
  NetworkWeights w = zero_weights(arch);
  w.seed = seed;
  Rng rng(seed);
  for (auto& p : w.params) {
    if (p.weight.rank() == 0) continue;
    const std::size_t fan_in = p.weight.size() / p.weight.dim(0);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : p.weight.data()) v = static_cast<float>(rng.uniform(-bound, bound));
  }
  return w;
}

Tensor make_batch(const std::vector<Example>& examples, std::span<const std::size_t> order) {
  constexpr std::size_t pixels = kInputSide * kInputSide;
  Tensor batch({order.size(), 1, kInputSide, kInputSide});
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& ex = examples.at(order[i]);
    if (ex.input.size() != pixels) throw ShapeMismatch("example input must hold 32x32 values");
    std::copy(ex.input.begin(), ex.input.end(), batch.data().begin() + static_cast<std::ptrdiff_t>(i * pixels));
  }
  return batch;
}

TrainResult train(const std::vector<Example>& examples, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (examples.empty()) throw EmptyDataset("training set is empty");
  if (cfg.batch == 0 || cfg.epochs < 0) throw InvalidArgument("batch must be positive and epochs non-negative");
  for (const auto& ex : examples) {
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= cfg.num_classes) {
      throw InvalidArgument("label " + std::to_string(ex.label) + " outside class range");
    }
  }

  TrainResult result{init_weights(NetworkArch::classifier(cfg.num_classes), cfg.seed), {}};
  auto& net = result.weights;
  std::vector<LayerParams<float>> velocity;
  for (const auto& p : net.params) velocity.push_back({Tensor(p.weight.shape()), Tensor(p.bias.shape())});

  // The shuffle stream is separate from the initialisation stream.
  Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto step = [&](Tensor& param, Tensor& vel, const Tensor& grad) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      vel[i] = cfg.momentum * vel[i] + grad[i];
      param[i] -= cfg.lr * vel[i];
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const auto count = std::min(cfg.batch, order.size() - start);
      const auto idx = std::span<const std::size_t>(order).subspan(start, count);
      std::vector<int> labels;
      labels.reserve(count);
      for (auto i : idx) labels.push_back(examples[i].label);

      const auto trace = forward_trace(net, make_batch(examples, idx));
      const auto loss = softmax_cross_entropy(trace.logits, std::span<const int>(labels));
      loss_sum += loss.loss * static_cast<double>(count);
      const auto grads = backward(net, trace, loss.grad);
      for (std::size_t l = 0; l < net.params.size(); ++l) {
        if (net.params[l].weight.rank() == 0) continue;
        step(net.params[l].weight, velocity[l].weight, grads[l].weight);
        step(net.params[l].bias, velocity[l].bias, grads[l].bias);
      }
    }
    const double mean = loss_sum / static_cast<double>(examples.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

double accuracy(const NetworkWeights& net, const std::vector<Example>& examples) {
  if (examples.empty()) throw EmptyDataset("no examples to score");
  std::size_t hits = 0;
  constexpr std::size_t chunk = 64;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < examples.size(); start += chunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(examples.size(), start + chunk); ++i) idx.push_back(i);
    const auto logits = forward(net, make_batch(examples, idx));
    const auto k = logits.dim(1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const float* row = logits.data().data() + b * k;
      const auto arg = static_cast<int>(std::max_element(row, row + k) - row);
      if (arg == examples[idx[b]].label) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

}  // namespace gridscan::nn
