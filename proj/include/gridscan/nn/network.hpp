#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "gridscan/nn/layers.hpp"
#include "gridscan/nn/tensor.hpp"

namespace gridscan::nn {

struct Conv {
  std::size_t in_ch = 0, out_ch = 0, kernel = 3, stride = 1, pad = 0;
  friend bool operator==(const Conv&, const Conv&) = default;
};
struct Relu {
  friend bool operator==(const Relu&, const Relu&) = default;
};
struct MaxPool {
  std::size_t kernel = 2, stride = 2;
  friend bool operator==(const MaxPool&, const MaxPool&) = default;
};
struct Flatten {
  friend bool operator==(const Flatten&, const Flatten&) = default;
};
struct Dense {
  std::size_t in = 0, out = 0;
  friend bool operator==(const Dense&, const Dense&) = default;
};

using LayerSpec = std::variant<Conv, Relu, MaxPool, Flatten, Dense>;

/// Tag byte used by the weights file.
enum class LayerKind : std::uint8_t { conv = 1, relu = 2, maxpool = 3, flatten = 4, dense = 5 };

LayerKind kind_of(const LayerSpec& layer) noexcept;
const char* kind_name(LayerKind kind) noexcept;
bool has_params(const LayerSpec& layer) noexcept;

inline constexpr std::size_t kInputSide = 32;
inline constexpr std::size_t kDefaultClasses = 10;

/// Ordered layer list plus the per-sample input shape (c, h, w).
struct NetworkArch {
  std::vector<LayerSpec> layers;
  Shape input{1, kInputSide, kInputSide};

  /// conv(1->16) relu conv(16->32) relu maxpool(2) conv(32->64, stride 2)
  /// relu flatten dense(->128) relu dense(128->classes)
  static NetworkArch classifier(std::size_t num_classes = kDefaultClasses);

  /// Per-sample activation shapes: entry i is the input of layer i, the last
  /// entry is the logits shape. Throws ShapeMismatch if the chain breaks or
  /// does not end in a vector.
  std::vector<Shape> activation_shapes() const;

  std::size_t num_classes() const;
  std::string describe() const;
  std::uint64_t fingerprint() const;

  friend bool operator==(const NetworkArch&, const NetworkArch&) = default;
};

template <typename T>
struct LayerParams {
  BasicTensor<T> weight;
  BasicTensor<T> bias;
  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Architecture, parameters (one slot per layer, empty for parameter-free
/// layers) and the seed the parameters were initialised from.
template <typename T>
struct BasicNetwork {
  NetworkArch arch;
  std::vector<LayerParams<T>> params;
  std::uint64_t seed = 0;

  template <typename U>
  BasicNetwork<U> cast() const {
    BasicNetwork<U> out{arch, {}, seed};
    for (const auto& p : params) out.params.push_back({p.weight.template cast<U>(), p.bias.template cast<U>()});
    return out;
  }

  friend bool operator==(const BasicNetwork&, const BasicNetwork&) = default;
};

using NetworkWeights = BasicNetwork<float>;

/// Parameter shapes of a layer, or empty shapes when it has none.
std::pair<Shape, Shape> param_shapes(const LayerSpec& layer);

/// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
NetworkWeights init_weights(const NetworkArch& arch, std::uint64_t seed);

/// All-zero parameters.
NetworkWeights zero_weights(const NetworkArch& arch);

template <typename T>
struct Trace {
  std::vector<BasicTensor<T>> inputs;  // input of each layer
  BasicTensor<T> logits;
};

namespace detail {

template <typename T>
void check_batch(const NetworkArch& arch, const BasicTensor<T>& batch) {
  Shape expect{batch.rank() > 0 ? batch.dim(0) : 0};
  expect.insert(expect.end(), arch.input.begin(), arch.input.end());
  if (batch.shape() != expect) {
    throw ShapeMismatch("network input must be " + shape_str(expect) + ", got " + shape_str(batch.shape()));
  }
}

template <typename T>
void check_params(const BasicNetwork<T>& net) {
  if (net.params.size() != net.arch.layers.size()) throw ShapeMismatch("parameter count does not match layers");
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    const auto [ws, bs] = param_shapes(net.arch.layers[i]);
    if (net.params[i].weight.shape() != ws || net.params[i].bias.shape() != bs) {
      throw ShapeMismatch("layer " + std::to_string(i) + " parameters do not match architecture");
    }
  }
}

template <typename T>
BasicTensor<T> apply_layer(const LayerSpec& layer, const LayerParams<T>& p, const BasicTensor<T>& x) {
  return std::visit(
      [&](const auto& l) -> BasicTensor<T> {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, Conv>) {
          return conv2d_forward(x, p.weight, p.bias, l.stride, l.pad);
        } else if constexpr (std::is_same_v<L, Relu>) {
          return relu_forward(x);
        } else if constexpr (std::is_same_v<L, MaxPool>) {
          return maxpool_forward(x, l.kernel, l.stride);
        } else if constexpr (std::is_same_v<L, Flatten>) {
          const auto n = x.dim(0);
          return x.reshaped({n, x.size() / n});
        } else {
          return dense_forward(x, p.weight, p.bias);
        }
      },
      layer);
}

}  // namespace detail

template <typename T>
Trace<T> forward_trace(const BasicNetwork<T>& net, const BasicTensor<T>& batch) {
  detail::check_batch(net.arch, batch);
  detail::check_params(net);
  Trace<T> trace;
  trace.inputs.reserve(net.arch.layers.size());
  BasicTensor<T> x = batch;
  for (std::size_t i = 0; i < net.arch.layers.size(); ++i) {
    BasicTensor<T> y = detail::apply_layer(net.arch.layers[i], net.params[i], x);
    trace.inputs.push_back(std::move(x));
    x = std::move(y);
  }
  trace.logits = std::move(x);
  return trace;
}

/// Logits (n, classes) for a batch (n, c, h, w).
template <typename T>
BasicTensor<T> forward(const BasicNetwork<T>& net, const BasicTensor<T>& batch) {
  detail::check_batch(net.arch, batch);
  detail::check_params(net);
  BasicTensor<T> x = batch;
  for (std::size_t i = 0; i < net.arch.layers.size(); ++i) x = detail::apply_layer(net.arch.layers[i], net.params[i], x);
  return x;
}

/// Parameter gradients of every layer given d loss / d logits.
template <typename T>
std::vector<LayerParams<T>> backward(const BasicNetwork<T>& net, const Trace<T>& trace,
                                     const BasicTensor<T>& grad_logits) {
  std::vector<LayerParams<T>> grads(net.arch.layers.size());
  BasicTensor<T> g = grad_logits;
  for (std::size_t i = net.arch.layers.size(); i-- > 0;) {
    const auto& x = trace.inputs[i];
    const auto& p = net.params[i];
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv>) {
            auto r = conv2d_backward(g, x, p.weight, l.stride, l.pad);
            grads[i] = {std::move(r.weight), std::move(r.bias)};
            g = std::move(r.input);
          } else if constexpr (std::is_same_v<L, Relu>) {
            g = relu_backward(g, x);
          } else if constexpr (std::is_same_v<L, MaxPool>) {
            g = maxpool_backward(g, x, l.kernel, l.stride);
          } else if constexpr (std::is_same_v<L, Flatten>) {
            g = std::move(g).reshaped(x.shape());
          } else {
            auto r = dense_backward(g, x, p.weight);
            grads[i] = {std::move(r.weight), std::move(r.bias)};
            g = std::move(r.input);
          }
        },
        net.arch.layers[i]);
  }
  return grads;
}

/// One training example: a normalised kInputSide x kInputSide raster
/// (ink = 1) and its class id.
struct Example {
  std::vector<float> input;
  int label = 0;
};

struct TrainConfig {
  int epochs = 5;
  std::size_t batch = 32;
  float lr = 0.01f;
  float momentum = 0.9f;
  std::uint64_t seed = 0;
  std::size_t num_classes = kDefaultClasses;
};

struct TrainResult {
  NetworkWeights weights;
  std::vector<double> epoch_loss;  // mean training loss of each epoch
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Minibatch SGD with momentum on NetworkArch::classifier. Initialisation
/// and the per-epoch shuffle both derive from cfg.seed. Throws EmptyDataset.
TrainResult train(const std::vector<Example>& examples, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Packs examples [first, first+count) of `order` into a (count, 1, 32, 32) tensor.
Tensor make_batch(const std::vector<Example>& examples, std::span<const std::size_t> order);

/// Fraction of examples whose argmax logit equals the label.
double accuracy(const NetworkWeights& net, const std::vector<Example>& examples);

}  // namespace gridscan::nn
