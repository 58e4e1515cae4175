#include <cmath>
#include <numeric>

#include "doctest.h"
#include "grad_check.hpp"
#include "gridscan/nn/layers.hpp"
#include "gridscan/nn/network.hpp"
#include "gridscan/nn/serialize.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace gridscan;
using namespace gridscan::nn;

namespace {

Tensor random_tensor(Rng& rng, Shape s, double lo = -1, double hi = 1) {
  Tensor t(std::move(s));
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

std::vector<double> as_double(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

double max_abs_diff(const Tensor& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("nn.forward") {
  TEST_CASE("conv of ones") {
    const Tensor x({1, 1, 3, 3}, 1.0f);
    const Tensor w({1, 1, 3, 3}, 1.0f);
    const auto y = conv2d_forward(x, w, Tensor({1}), 1, 0);
    CHECK(y.shape() == Shape{1, 1, 1, 1});
    CHECK(y[0] == 9.0f);
  }

  TEST_CASE("identity kernel") {
    Rng rng(1);
    const auto x = random_tensor(rng, {2, 1, 5, 6});
    Tensor w({1, 1, 3, 3});
    w[4] = 1.0f;
    CHECK(conv2d_forward(x, w, Tensor({1}), 1, 1) == x);
  }

  TEST_CASE("conv, maxpool and dense agree with loop oracles") {
    Rng rng(2);
    for (int t = 0; t < 40; ++t) {
      const int n = 1 + static_cast<int>(rng.below(3)), c = 1 + static_cast<int>(rng.below(3));
      const int h = 3 + static_cast<int>(rng.below(6)), w = 3 + static_cast<int>(rng.below(6));
      const int o = 1 + static_cast<int>(rng.below(3)), k = 1 + static_cast<int>(rng.below(3));
      const int stride = 1 + static_cast<int>(rng.below(2)), pad = static_cast<int>(rng.below(2));
      const auto sz = [](int v) { return static_cast<std::size_t>(v); };
      const auto x = random_tensor(rng, {sz(n), sz(c), sz(h), sz(w)});
      const auto wt = random_tensor(rng, {sz(o), sz(c), sz(k), sz(k)});
      const auto b = random_tensor(rng, {sz(o)});
      int oh = 0, ow = 0;
      const auto ref = oracle::conv(as_double(x), n, c, h, w, as_double(wt), o, k, as_double(b), stride, pad, oh, ow);
      const auto y = conv2d_forward(x, wt, b, sz(stride), sz(pad));
      CHECK(y.shape() == Shape{sz(n), sz(o), sz(oh), sz(ow)});
      CHECK(max_abs_diff(y, ref) < 1e-6 * 20);  // float accumulation over <= 27 terms

      const int pk = 1 + static_cast<int>(rng.below(2));
      const auto pref = oracle::maxpool(as_double(x), n, c, h, w, pk, pk, oh, ow);
      CHECK(max_abs_diff(maxpool_forward(x, sz(pk), sz(pk)), pref) == 0.0);

      const int in = c * h * w, out = 1 + static_cast<int>(rng.below(5));
      const auto dw = random_tensor(rng, {sz(out), sz(in)});
      const auto db = random_tensor(rng, {sz(out)});
      const auto dref = oracle::dense(as_double(x), n, in, as_double(dw), out, as_double(db));
      CHECK(max_abs_diff(dense_forward(x.reshaped({sz(n), sz(in)}), dw, db), dref) < 1e-5);
    }
  }

  TEST_CASE("conv forward on a 1x2x5x5 input is within 1e-6 of the oracle") {
    Rng rng(3);
    const auto x = random_tensor(rng, {1, 2, 5, 5});
    const auto wt = random_tensor(rng, {3, 2, 3, 3});
    const auto b = random_tensor(rng, {3});
    int oh = 0, ow = 0;
    const auto ref = oracle::conv(as_double(x), 1, 2, 5, 5, as_double(wt), 3, 3, as_double(b), 1, 1, oh, ow);
    CHECK(max_abs_diff(conv2d_forward(x, wt, b, 1, 1), ref) < 1e-6);
  }

  TEST_CASE("shape errors") {
    CHECK_THROWS_AS(conv2d_forward(Tensor({1, 2, 5, 5}), Tensor({1, 3, 3, 3}), Tensor({1}), 1, 0), ShapeMismatch);
    CHECK_THROWS_AS(dense_forward(Tensor({1, 4}), Tensor({2, 5}), Tensor({2})), ShapeMismatch);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), ShapeMismatch);
  }
}

TEST_SUITE("nn.backward") {
  TEST_CASE("relu blocks negative inputs") {
    const Tensor x({1, 3}, std::vector<float>{-1.0f, 0.5f, -0.1f});
    const auto g = relu_backward(Tensor({1, 3}, 1.0f), x);
    CHECK(g == Tensor({1, 3}, std::vector<float>{0.0f, 1.0f, 0.0f}));
  }

  TEST_CASE("dense gradient on a 2x2 case by hand") {
    // y = W x + b with x = (1, 2), W = [[1, 2], [3, 4]], upstream g = (1, -1)
    const Tensor x({1, 2}, std::vector<float>{1, 2});
    const Tensor w({2, 2}, std::vector<float>{1, 2, 3, 4});
    const Tensor g({1, 2}, std::vector<float>{1, -1});
    const auto r = dense_backward(g, x, w);
    CHECK(r.weight == Tensor({2, 2}, std::vector<float>{1, 2, -1, -2}));  // g^T x
    CHECK(r.bias == Tensor({2}, std::vector<float>{1, -1}));
    CHECK(r.input == Tensor({1, 2}, std::vector<float>{-2, -2}));  // W^T g
  }

  TEST_CASE("every layer kind matches finite differences") {
    Rng rng(44);
    NetworkArch arch;
    arch.input = {2, 6, 6};
    arch.layers = {Conv{2, 3, 3, 1, 1}, Relu{}, MaxPool{2, 2}, Conv{3, 4, 3, 2, 1}, Relu{}, Flatten{}, Dense{16, 5},
                   Relu{}, Dense{5, 4}};
    auto net = init_weights(arch, 9);
    for (auto& p : net.params)
      for (auto& v : p.bias.data()) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    const auto x = random_tensor(rng, {4, 2, 6, 6});
    const std::vector<int> labels{0, 3, 1, 2};

    const auto trace = forward_trace(net, x);
    const auto loss = softmax_cross_entropy(trace.logits, std::span<const int>(labels));
    const auto grads = backward(net, trace, loss.grad);

    auto dnet = net.cast<double>();
    const auto dx = x.cast<double>();
    for (std::size_t l = 0; l < arch.layers.size(); ++l) {
      if (!has_params(arch.layers[l])) continue;
      const auto ww = gradcheck::check_tensor(dnet, dnet.params[l].weight, grads[l].weight, dx, labels, 0, rng);
      const auto wb = gradcheck::check_tensor(dnet, dnet.params[l].bias, grads[l].bias, dx, labels, 0, rng);
      INFO("layer " << l);
      CHECK(ww.rel < 1e-3);
      CHECK(wb.rel < 1e-3);
    }
  }

  TEST_CASE("softmax cross entropy") {
    const Tensor uniform({2, 10});
    const std::vector<int> labels{3, 7};
    const auto r = softmax_cross_entropy(uniform, std::span<const int>(labels));
    CHECK(r.loss == doctest::Approx(std::log(10.0)).epsilon(1e-7));

    Rng rng(5);
    const auto logits = random_tensor(rng, {4, 10}, -5, 5);
    const auto p = softmax(logits);
    for (std::size_t b = 0; b < 4; ++b) {
      double s = 0;
      for (std::size_t j = 0; j < 10; ++j) {
        CHECK(p[b * 10 + j] >= 0.0f);
        s += p[b * 10 + j];
      }
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }

    const std::vector<int> lab{1, 0, 9, 4};
    const auto dl = logits.cast<double>();
    const auto res = softmax_cross_entropy(dl, std::span<const int>(lab));
    for (std::size_t i = 0; i < dl.size(); ++i) {
      auto up = dl, down = dl;
      up[i] += 1e-5;
      down[i] -= 1e-5;
      const double num = (softmax_cross_entropy(up, std::span<const int>(lab)).loss -
                          softmax_cross_entropy(down, std::span<const int>(lab)).loss) /
                         2e-5;
      CHECK(gradcheck::rel_error(res.grad[i], num) < 1e-4);
    }
    const std::vector<int> bad{10};
    CHECK_THROWS_AS(softmax_cross_entropy(Tensor({1, 10}), std::span<const int>(bad)), InvalidArgument);
  }
}

TEST_SUITE("nn.network") {
  TEST_CASE("classifier architecture") {
    const auto arch = NetworkArch::classifier();
    const auto shapes = arch.activation_shapes();
    CHECK(shapes.back() == Shape{10});
    CHECK(arch.num_classes() == 10);
    // no residual, pyramid pooling or upsample/concat nodes exist in the layer
    // vocabulary; the stride-2 conv follows the max-pool
    std::size_t pool_at = 0;
    for (std::size_t i = 0; i < arch.layers.size(); ++i)
      if (std::holds_alternative<MaxPool>(arch.layers[i])) pool_at = i;
    REQUIRE(pool_at + 1 < arch.layers.size());
    const auto* neck = std::get_if<Conv>(&arch.layers[pool_at + 1]);
    REQUIRE(neck != nullptr);
    CHECK(neck->stride == 2);
    CHECK(std::holds_alternative<Dense>(arch.layers.back()));
  }

  TEST_CASE("forward shapes and determinism") {
    const auto net = init_weights(NetworkArch::classifier(), 3);
    Rng rng(1);
    auto x = random_tensor(rng, {1, 1, 32, 32}, 0, 1);
    CHECK(forward(net, x).shape() == Shape{1, 10});

    const auto zero = zero_weights(NetworkArch::classifier());
    const auto z = forward(zero, x);
    CHECK(std::all_of(z.data().begin(), z.data().end(), [](float v) { return v == 0.0f; }));

    // duplicated and permuted rows
    auto batch = random_tensor(rng, {3, 1, 32, 32}, 0, 1);
    std::copy_n(batch.data().begin(), 1024, batch.data().begin() + 2048);
    const auto y = forward(net, batch);
    for (std::size_t j = 0; j < 10; ++j) CHECK(y[j] == y[20 + j]);
    Tensor swapped(batch.shape());
    std::copy_n(batch.data().begin() + 1024, 1024, swapped.data().begin());
    std::copy_n(batch.data().begin(), 1024, swapped.data().begin() + 1024);
    std::copy_n(batch.data().begin() + 2048, 1024, swapped.data().begin() + 2048);
    const auto ys = forward(net, swapped);
    for (std::size_t j = 0; j < 10; ++j) {
      CHECK(ys[j] == y[10 + j]);
      CHECK(ys[10 + j] == y[j]);
    }
    CHECK_THROWS_AS(forward(net, Tensor({1, 1, 28, 28})), ShapeMismatch);
  }

  TEST_CASE("architecture chain errors") {
    NetworkArch bad;
    bad.layers = {Conv{1, 4, 3, 1, 1}, Flatten{}, Dense{100, 10}};
    CHECK_THROWS_AS(bad.activation_shapes(), ShapeMismatch);
  }
}

namespace {

std::vector<Example> toy_examples(std::size_t n, std::uint64_t seed) {
  // class k lights a distinct 8x8 block
  Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    Example ex{std::vector<float>(1024, 0.0f), static_cast<int>(i % 10)};
    const int bx = (ex.label % 4) * 8, by = (ex.label / 4) * 8;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) ex.input[static_cast<std::size_t>((by + y) * 32 + bx + x)] = 1.0f;
    for (auto& v : ex.input) v = std::clamp(v + static_cast<float>(rng.uniform(-0.2, 0.2)), 0.0f, 1.0f);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

TEST_SUITE("nn.train") {
  TEST_CASE("loss falls, seeds reproduce, lr 0 freezes") {
    const auto data = toy_examples(120, 1);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.seed = 7;
    const auto a = train(data, cfg);
    REQUIRE(a.epoch_loss.size() == 4);
    CHECK(a.epoch_loss[3] < a.epoch_loss[0]);
    const auto b = train(data, cfg);
    CHECK(encode_weights(a.weights) == encode_weights(b.weights));

    cfg.lr = 0.0f;
    cfg.epochs = 1;
    const auto frozen = train(data, cfg);
    CHECK(frozen.weights == init_weights(NetworkArch::classifier(), 7));
    CHECK_THROWS_AS(train({}, cfg), EmptyDataset);
  }
}

TEST_SUITE("nn.serialize") {
  TEST_CASE("round trip and corruption") {
    TempDir tmp;
    const auto w = init_weights(NetworkArch::classifier(), 42);
    save_weights(w, tmp / "w.bin");
    const auto back = load_weights(tmp / "w.bin");
    CHECK(back == w);
    CHECK(encode_weights(back) == encode_weights(w));

    auto bytes = encode_weights(w);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "GSW1");
    auto truncated = bytes;
    truncated.resize(truncated.size() / 2);
    CHECK_THROWS_AS(decode_weights(truncated), FormatError);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_weights(bad_magic), FormatError);
    auto bad_tag = bytes;
    bad_tag[8] = 99;  // first layer tag
    CHECK_THROWS_AS(decode_weights(bad_tag), FormatError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_weights(trailing), FormatError);
    CHECK_THROWS_AS(load_weights(tmp / "none.bin"), IoError);
  }
}
