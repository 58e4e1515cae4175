#pragma once

// Forward and backward kernels for the classifier layers. Templated on the
// scalar so the same code runs in float for training and in double for
// gradient checking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "gridscan/nn/tensor.hpp"

namespace gridscan::nn {

inline std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  if (in + 2 * pad < k || stride == 0) throw ShapeMismatch("convolution window larger than padded input");
  return (in + 2 * pad - k) / stride + 1;
}

namespace detail {

// Output index range [lo, hi) whose source coordinate o*stride - pad + tap
// falls inside [0, extent).
inline void valid_range(std::size_t out_extent, std::size_t extent, std::size_t stride, std::size_t pad,
                        std::size_t tap, std::size_t& lo, std::size_t& hi) {
  const auto s = static_cast<long>(stride);
  const long shift = static_cast<long>(tap) - static_cast<long>(pad);
  // smallest o with o*s + shift >= 0
  long l = shift >= 0 ? 0 : (-shift + s - 1) / s;
  // largest o with o*s + shift <= extent-1
  const long top = static_cast<long>(extent) - 1 - shift;
  long h = top < 0 ? -1 : top / s;
  h = std::min(h, static_cast<long>(out_extent) - 1);
  lo = static_cast<std::size_t>(std::max(0L, l));
  hi = h < l ? lo : static_cast<std::size_t>(h + 1);
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeMismatch(what);
}

}  // namespace detail

/// Cross-correlation with zero padding.
/// x: (n, c, h, w), weight: (o, c, k, k), bias: (o) -> (n, o, oh, ow).
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias,
                              std::size_t stride, std::size_t pad) {
  detail::require(x.rank() == 4 && weight.rank() == 4 && bias.rank() == 1, "conv2d: bad tensor ranks");
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto o = weight.dim(0), k = weight.dim(2);
  detail::require(weight.dim(1) == c && weight.dim(3) == k && bias.dim(0) == o,
                  "conv2d: weight " + shape_str(weight.shape()) + " incompatible with input " + shape_str(x.shape()));
  const auto oh = conv_out_extent(h, k, stride, pad);
  const auto ow = conv_out_extent(w, k, stride, pad);

  BasicTensor<T> y({n, o, oh, ow});
  const T* xd = x.data().data();
  const T* wd = weight.data().data();
  T* yd = y.data().data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oc = 0; oc < o; ++oc) {
      T* yplane = yd + (b * o + oc) * oh * ow;
      std::fill(yplane, yplane + oh * ow, bias[oc]);
      for (std::size_t ic = 0; ic < c; ++ic) {
        const T* xplane = xd + (b * c + ic) * h * w;
        for (std::size_t u = 0; u < k; ++u) {
          std::size_t i0, i1;
          detail::valid_range(oh, h, stride, pad, u, i0, i1);
          for (std::size_t v = 0; v < k; ++v) {
            const T wv = wd[((oc * c + ic) * k + u) * k + v];
            std::size_t j0, j1;
            detail::valid_range(ow, w, stride, pad, v, j0, j1);
            for (std::size_t i = i0; i < i1; ++i) {
              const T* xrow = xplane + (i * stride + u - pad) * w;
              T* yrow = yplane + i * ow;
              if (stride == 1) {
                for (std::size_t j = j0; j < j1; ++j) yrow[j] += wv * xrow[j + v - pad];
              } else {
                for (std::size_t j = j0; j < j1; ++j) yrow[j] += wv * xrow[j * stride + v - pad];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
struct ParamGrads {
  BasicTensor<T> input;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

template <typename T>
ParamGrads<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x, const BasicTensor<T>& weight,
                              std::size_t stride, std::size_t pad) {
  detail::require(x.rank() == 4 && weight.rank() == 4 && grad_out.rank() == 4, "conv2d_backward: bad tensor ranks");
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto o = weight.dim(0), k = weight.dim(2);
  const auto oh = conv_out_extent(h, k, stride, pad);
  const auto ow = conv_out_extent(w, k, stride, pad);
  detail::require(grad_out.shape() == Shape{n, o, oh, ow} && weight.dim(1) == c,
                  "conv2d_backward: gradient shape " + shape_str(grad_out.shape()) + " does not match forward");

  ParamGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()), BasicTensor<T>({o})};
  const T* xd = x.data().data();
  const T* wd = weight.data().data();
  const T* gd = grad_out.data().data();
  T* dx = g.input.data().data();
  T* dw = g.weight.data().data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oc = 0; oc < o; ++oc) {
      const T* gplane = gd + (b * o + oc) * oh * ow;
      T bsum = 0;
      for (std::size_t t = 0; t < oh * ow; ++t) bsum += gplane[t];
      g.bias[oc] += bsum;
      for (std::size_t ic = 0; ic < c; ++ic) {
        const T* xplane = xd + (b * c + ic) * h * w;
        T* dxplane = dx + (b * c + ic) * h * w;
        for (std::size_t u = 0; u < k; ++u) {
          std::size_t i0, i1;
          detail::valid_range(oh, h, stride, pad, u, i0, i1);
          for (std::size_t v = 0; v < k; ++v) {
            const std::size_t widx = ((oc * c + ic) * k + u) * k + v;
            const T wv = wd[widx];
            std::size_t j0, j1;
            detail::valid_range(ow, w, stride, pad, v, j0, j1);
            T acc = 0;
            for (std::size_t i = i0; i < i1; ++i) {
              const std::size_t row = (i * stride + u - pad) * w;
              const T* grow = gplane + i * ow;
              if (stride == 1) {
                const T* src = xplane + row;
                T* dst = dxplane + row;
                for (std::size_t j = j0; j < j1; ++j) {
                  acc += grow[j] * src[j + v - pad];
                  dst[j + v - pad] += grow[j] * wv;
                }
              } else {
                for (std::size_t j = j0; j < j1; ++j) {
                  const std::size_t col = j * stride + v - pad;
                  acc += grow[j] * xplane[row + col];
                  dxplane[row + col] += grow[j] * wv;
                }
              }
            }
            dw[widx] += acc;
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x) {
  BasicTensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x) {
  detail::require(grad_out.shape() == x.shape(), "relu_backward: shape mismatch");
  BasicTensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? grad_out[i] : T(0);
  return dx;
}

/// Max pooling without padding; ties resolve to the first element in
/// row-major window order.
template <typename T>
BasicTensor<T> maxpool_forward(const BasicTensor<T>& x, std::size_t k, std::size_t stride) {
  detail::require(x.rank() == 4, "maxpool: expected (n,c,h,w)");
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto oh = conv_out_extent(h, k, stride, 0);
  const auto ow = conv_out_extent(w, k, stride, 0);
  BasicTensor<T> y({n, c, oh, ow});
  for (std::size_t p = 0; p < n * c; ++p) {
    const T* src = x.data().data() + p * h * w;
    T* dst = y.data().data() + p * oh * ow;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        T best = src[i * stride * w + j * stride];
        for (std::size_t u = 0; u < k; ++u) {
          for (std::size_t v = 0; v < k; ++v) best = std::max(best, src[(i * stride + u) * w + j * stride + v]);
        }
        dst[i * ow + j] = best;
      }
    }
  }
  return y;
}

template <typename T>
BasicTensor<T> maxpool_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x, std::size_t k,
                                std::size_t stride) {
  detail::require(x.rank() == 4, "maxpool_backward: expected (n,c,h,w)");
  const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto oh = conv_out_extent(h, k, stride, 0);
  const auto ow = conv_out_extent(w, k, stride, 0);
  detail::require(grad_out.shape() == Shape{n, c, oh, ow}, "maxpool_backward: gradient shape mismatch");
  BasicTensor<T> dx(x.shape());
  for (std::size_t p = 0; p < n * c; ++p) {
    const T* src = x.data().data() + p * h * w;
    const T* g = grad_out.data().data() + p * oh * ow;
    T* dst = dx.data().data() + p * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t arg = i * stride * w + j * stride;
        for (std::size_t u = 0; u < k; ++u) {
          for (std::size_t v = 0; v < k; ++v) {
            const std::size_t idx = (i * stride + u) * w + j * stride + v;
            if (src[idx] > src[arg]) arg = idx;
          }
        }
        dst[arg] += g[i * ow + j];
      }
    }
  }
  return dx;
}

/// x: (n, in), weight: (out, in), bias: (out) -> (n, out).
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
  detail::require(x.rank() == 2 && weight.rank() == 2 && bias.rank() == 1, "dense: bad tensor ranks");
  const auto n = x.dim(0), in = x.dim(1), out = weight.dim(0);
  detail::require(weight.dim(1) == in && bias.dim(0) == out,
                  "dense: weight " + shape_str(weight.shape()) + " incompatible with input " + shape_str(x.shape()));
  BasicTensor<T> y({n, out});
  for (std::size_t b = 0; b < n; ++b) {
    const T* xr = x.data().data() + b * in;
    for (std::size_t o = 0; o < out; ++o) {
      const T* wr = weight.data().data() + o * in;
      T acc = 0;
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
      y[b * out + o] = acc + bias[o];
    }
  }
  return y;
}

template <typename T>
ParamGrads<T> dense_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x, const BasicTensor<T>& weight) {
  detail::require(x.rank() == 2 && weight.rank() == 2, "dense_backward: bad tensor ranks");
  const auto n = x.dim(0), in = x.dim(1), out = weight.dim(0);
  detail::require(grad_out.shape() == Shape{n, out}, "dense_backward: gradient shape mismatch");
  ParamGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()), BasicTensor<T>({out})};
  for (std::size_t b = 0; b < n; ++b) {
    const T* xr = x.data().data() + b * in;
    T* dxr = g.input.data().data() + b * in;
    for (std::size_t o = 0; o < out; ++o) {
      const T go = grad_out[b * out + o];
      if (go == T(0)) continue;
      const T* wr = weight.data().data() + o * in;
      T* dwr = g.weight.data().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        dwr[i] += go * xr[i];
        dxr[i] += go * wr[i];
      }
      g.bias[o] += go;
    }
  }
  return g;
}

template <typename T>
struct LossResult {
  double loss = 0;
  BasicTensor<T> grad;  // d loss / d logits
};

/// Row-wise softmax with the row max subtracted first.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  detail::require(logits.rank() == 2, "softmax: expected (n, classes)");
  const auto n = logits.dim(0), k = logits.dim(1);
  BasicTensor<T> p(logits.shape());
  for (std::size_t b = 0; b < n; ++b) {
    const T* row = logits.data().data() + b * k;
    const T m = *std::max_element(row, row + k);
    double sum = 0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j] - m));
    for (std::size_t j = 0; j < k; ++j) p[b * k + j] = static_cast<T>(std::exp(static_cast<double>(row[j] - m)) / sum);
  }
  return p;
}

/// Mean cross-entropy over the batch; gradient is (softmax - onehot) / n.
template <typename T>
LossResult<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels) {
  detail::require(logits.rank() == 2 && logits.dim(0) == labels.size(),
                  "softmax_cross_entropy: label count does not match batch");
  const auto n = logits.dim(0), k = logits.dim(1);
  LossResult<T> r{0.0, BasicTensor<T>(logits.shape())};
  for (std::size_t b = 0; b < n; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw InvalidArgument("label " + std::to_string(label) + " out of range for " + std::to_string(k) + " classes");
    }
    const T* row = logits.data().data() + b * k;
    const double m = static_cast<double>(*std::max_element(row, row + k));
    double sum = 0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - m);
    const double log_sum = std::log(sum);
    r.loss += -(static_cast<double>(row[label]) - m - log_sum);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(row[j]) - m - log_sum);
      r.grad[b * k + j] = static_cast<T>((p - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) / static_cast<double>(n));
    }
  }
  r.loss /= static_cast<double>(n);
  return r;
}

}  // namespace gridscan::nn
