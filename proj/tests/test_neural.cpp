#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "gsi/gsi.hpp"
#include "helpers.hpp"

using namespace gsi;
namespace th = test_helpers;

namespace {

DenseNet tiny_net(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                  std::uint64_t seed) {
  return init_params(dims, acts, seed);
}

/// Sum-of-squared-error loss over a batch output, 0.5 * ||y - t||^2 summed.
double sse_loss(const Matrix& y, const Matrix& t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y.data()[i] - t.data()[i];
    acc += 0.5 * d * d;
  }
  return acc;
}

Matrix sse_grad(const Matrix& y, const Matrix& t) {
  Matrix g(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.size(); ++i) g.data()[i] = y.data()[i] - t.data()[i];
  return g;
}

/// Cross-entropy against all-ones targets for sigmoid outputs.
double ce_loss(const Matrix& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    acc += -std::log(std::clamp(y.data()[i], 1e-7, 1.0 - 1e-7));
  return acc;
}

Matrix ce_grad(const Matrix& y) {
  Matrix g(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.size(); ++i)
    g.data()[i] = -1.0 / std::clamp(y.data()[i], 1e-7, 1.0 - 1e-7);
  return g;
}

}  // namespace

TEST_CASE("forward basics", "[neural]") {
  SECTION("zero parameters with tanh give zero output") {
    DenseNet net = tiny_net({3, 4, 2}, {Activation::tanh, Activation::tanh}, 1);
    for (Layer& layer : net.layers) {
      std::fill(layer.weights.data().begin(), layer.weights.data().end(), 0.0);
      std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
    Matrix batch(2, 3, 1.5);
    const Matrix out = forward(net, batch).first;
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0);
  }
  SECTION("identity layer passes input through") {
    DenseNet net;
    Layer layer;
    layer.weights = Matrix::identity(3);
    layer.bias.assign(3, 0.0);
    layer.activation = Activation::identity;
    net.layers.push_back(layer);
    Matrix batch(1, 3);
    batch(0, 0) = -1.0;
    batch(0, 1) = 2.0;
    batch(0, 2) = 0.5;
    const Matrix out = forward(net, batch).first;
    for (std::size_t j = 0; j < 3; ++j) CHECK(out(0, j) == batch(0, j));
  }
  SECTION("1->1 net, W=2, b=1, tanh maps 0 to tanh(1)") {
    DenseNet net;
    Layer layer;
    layer.weights = Matrix(1, 1);
    layer.weights(0, 0) = 2.0;
    layer.bias.assign(1, 1.0);
    layer.activation = Activation::tanh;
    net.layers.push_back(layer);
    Matrix batch(1, 1, 0.0);
    CHECK_THAT(forward(net, batch).first(0, 0),
               Catch::Matchers::WithinAbs(std::tanh(1.0), 1e-12));
  }
  SECTION("input width mismatch throws") {
    DenseNet net = tiny_net({3, 2}, {Activation::tanh}, 2);
    CHECK_THROWS_AS(forward(net, Matrix(1, 4)), DimensionMismatch);
  }
}

TEST_CASE("backward: zero output grad gives zero gradients", "[neural]") {
  DenseNet net = tiny_net({4, 5, 3}, {Activation::tanh, Activation::sigmoid}, 3);
  Matrix batch(2, 4, 0.7);
  const auto [out, tape] = forward(net, batch);
  const NetGradients grads = backward(net, tape, Matrix(2, 3, 0.0));
  for (const LayerGrads& lg : grads.layers) {
    CHECK(max_abs(lg.weights.data()) == 0.0);
    for (double b : lg.bias) CHECK(b == 0.0);
  }
  CHECK(max_abs(grads.input.data()) == 0.0);
}

TEST_CASE("backward matches finite differences on random nets", "[neural]") {
  // covers tanh/sigmoid/identity activations and two loss shapes
  struct Case {
    std::vector<std::size_t> dims;
    std::vector<Activation> acts;
    bool cross_entropy;
  };
  const std::vector<Case> cases = {
      {{5, 8, 4}, {Activation::tanh, Activation::identity}, false},
      {{6, 10, 16, 3}, {Activation::tanh, Activation::tanh, Activation::sigmoid}, true},
      {{4, 7, 2}, {Activation::sigmoid, Activation::tanh}, false},
  };
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (const Case& c : cases) {
    DenseNet net = init_params(c.dims, c.acts, rng());
    const std::size_t batch_size = 3;
    Matrix batch(batch_size, c.dims.front());
    for (std::size_t i = 0; i < batch.size(); ++i) batch.data()[i] = gauss(rng);
    Matrix targets(batch_size, c.dims.back());
    for (std::size_t i = 0; i < targets.size(); ++i) targets.data()[i] = gauss(rng);

    const auto loss_of = [&](const DenseNet& n) {
      const Matrix y = forward(n, batch).first;
      return c.cross_entropy ? ce_loss(y) : sse_loss(y, targets);
    };

    const auto [out, tape] = forward(net, batch);
    const NetGradients grads =
        backward(net, tape, c.cross_entropy ? ce_grad(out) : sse_grad(out, targets));

    // every weight and bias of every layer
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      Layer& layer = net.layers[l];
      for (std::size_t i = 0; i < layer.weights.size(); ++i) {
        const double saved = layer.weights.data()[i];
        const double fd = th::central_diff(
            [&](double v) {
              layer.weights.data()[i] = v;
              return loss_of(net);
            },
            saved);
        layer.weights.data()[i] = saved;
        REQUIRE(th::close(grads.layers[l].weights.data()[i], fd, 1e-4));
      }
      for (std::size_t i = 0; i < layer.bias.size(); ++i) {
        const double saved = layer.bias[i];
        const double fd = th::central_diff(
            [&](double v) {
              layer.bias[i] = v;
              return loss_of(net);
            },
            saved);
        layer.bias[i] = saved;
        REQUIRE(th::close(grads.layers[l].bias[i], fd, 1e-4));
      }
    }
    // input gradient
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double saved = batch.data()[i];
      const double fd = th::central_diff(
          [&](double v) {
            batch.data()[i] = v;
            return loss_of(net);
          },
          saved);
      batch.data()[i] = saved;
      REQUIRE(th::close(grads.input.data()[i], fd, 1e-4));
    }
  }
}

TEST_CASE("identity layer SSE weight gradient is the outer-product sum", "[neural]") {
  // loss = 0.5 sum_r ||y_r - t_r||^2 with y = W u + b  =>  dL/dW = sum_r (y_r - t_r) u_r^T
  DenseNet net;
  Layer layer;
  layer.weights = Matrix(2, 3);
  std::mt19937_64 rng(123);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = gauss(rng);
  layer.bias.assign(2, 0.25);
  layer.activation = Activation::identity;
  net.layers.push_back(layer);

  Matrix batch(4, 3);
  for (std::size_t i = 0; i < batch.size(); ++i) batch.data()[i] = gauss(rng);
  Matrix targets(4, 2);
  for (std::size_t i = 0; i < targets.size(); ++i) targets.data()[i] = gauss(rng);

  const auto [out, tape] = forward(net, batch);
  const NetGradients grads = backward(net, tape, sse_grad(out, targets));

  Matrix expected(2, 3);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t o = 0; o < 2; ++o)
      for (std::size_t i = 0; i < 3; ++i)
        expected(o, i) += (out(r, o) - targets(r, o)) * batch(r, i);
  CHECK(max_abs_diff(grads.layers[0].weights, expected) <= 1e-12);
}

TEST_CASE("adam_step behaviour", "[neural]") {
  const auto scalar_net = [] {
    DenseNet net;
    Layer layer;
    layer.weights = Matrix(1, 1, 0.0);
    layer.bias.assign(1, 0.0);
    layer.activation = Activation::identity;
    net.layers.push_back(layer);
    return net;
  };

  SECTION("zero gradient leaves parameters unchanged") {
    DenseNet net = tiny_net({3, 4, 2}, {Activation::tanh, Activation::tanh}, 5);
    const DenseNet before = net;
    AdamState state = AdamState::init(net);
    NetGradients grads;
    for (const Layer& layer : net.layers)
      grads.layers.push_back({Matrix(layer.out_size(), layer.in_size()), Vector(layer.out_size(), 0.0)});
    adam_step(net, state, grads);
    for (std::size_t l = 0; l < net.layers.size(); ++l)
      CHECK(max_abs_diff(net.layers[l].weights, before.layers[l].weights) == 0.0);
    CHECK(state.t == 1);
  }

  SECTION("first step moves by about lr regardless of gradient scale") {
    DenseNet net = scalar_net();
    AdamState state = AdamState::init(net);
    NetGradients grads;
    grads.layers.push_back({Matrix(1, 1, 4.0), Vector(1, 0.0)});
    adam_step(net, state, grads);
    // bias-corrected first step: -lr * g/|g| up to the eps correction
    CHECK_THAT(net.layers[0].weights(0, 0), Catch::Matchers::WithinAbs(-0.001, 1e-6));
  }

  SECTION("determinism: identical calls give identical parameters") {
    DenseNet a = tiny_net({4, 6, 3}, {Activation::tanh, Activation::sigmoid}, 6);
    DenseNet b = a;
    AdamState sa = AdamState::init(a);
    AdamState sb = AdamState::init(b);
    NetGradients grads;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const Layer& layer : a.layers) {
      LayerGrads lg{Matrix(layer.out_size(), layer.in_size()), Vector(layer.out_size())};
      for (std::size_t i = 0; i < lg.weights.size(); ++i) lg.weights.data()[i] = gauss(rng);
      for (double& v : lg.bias) v = gauss(rng);
      grads.layers.push_back(std::move(lg));
    }
    adam_step(a, sa, grads);
    adam_step(b, sb, grads);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
      CHECK(max_abs_diff(a.layers[l].weights, b.layers[l].weights) == 0.0);
      CHECK(a.layers[l].bias == b.layers[l].bias);
    }
  }

  SECTION("shape mismatch throws") {
    DenseNet net = scalar_net();
    AdamState state = AdamState::init(net);
    NetGradients grads;
    grads.layers.push_back({Matrix(2, 2), Vector(2, 0.0)});
    CHECK_THROWS_AS(adam_step(net, state, grads), ShapeMismatch);
  }
}

TEST_CASE("init_params properties", "[neural]") {
  SECTION("fixed seed reproduces the net bitwise") {
    const DenseNet a = init_params({8, 16, 4}, {Activation::tanh, Activation::sigmoid}, 99);
    const DenseNet b = init_params({8, 16, 4}, {Activation::tanh, Activation::sigmoid}, 99);
    for (std::size_t l = 0; l < a.layers.size(); ++l)
      CHECK(max_abs_diff(a.layers[l].weights, b.layers[l].weights) == 0.0);
  }
  SECTION("biases start at zero") {
    const DenseNet net = init_params({8, 16, 4}, {Activation::tanh, Activation::tanh}, 100);
    for (const Layer& layer : net.layers)
      for (double b : layer.bias) CHECK(b == 0.0);
  }
  SECTION("weights stay inside the Glorot bound and average near zero") {
    const DenseNet net = init_params({256, 256}, {Activation::tanh}, 101);
    const Matrix& w = net.layers[0].weights;
    const double bound = std::sqrt(6.0 / 512.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(std::abs(w.data()[i]) <= bound);
      sum += w.data()[i];
    }
    CHECK(std::abs(sum / static_cast<double>(w.size())) < 0.01);
  }
  SECTION("invalid architectures throw") {
    CHECK_THROWS_AS(init_params({4}, {}, 1), InvalidArchitecture);
    CHECK_THROWS_AS(init_params({4, 0, 2}, {Activation::tanh, Activation::tanh}, 1),
                    InvalidArchitecture);
    CHECK_THROWS_AS(init_params({4, 2}, {}, 1), InvalidArchitecture);
  }
}

TEST_CASE("checkpoints roundtrip through GSNN1", "[neural]") {
  const DenseNet net = init_params({6, 9, 4}, {Activation::tanh, Activation::sigmoid}, 55);
  std::stringstream buffer;
  save_net(net, buffer);

  SECTION("roundtrip is exact") {
    const DenseNet back = load_net(buffer);
    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      CHECK(back.layers[l].activation == net.layers[l].activation);
      CHECK(max_abs_diff(back.layers[l].weights, net.layers[l].weights) == 0.0);
      CHECK(back.layers[l].bias == net.layers[l].bias);
    }
  }
  SECTION("bad magic throws") {
    std::stringstream corrupt("BADM1" + buffer.str().substr(5));
    CHECK_THROWS_AS(load_net(corrupt), BadMagic);
  }
  SECTION("truncated parameters throw") {
    std::string bytes = buffer.str();
    bytes.resize(bytes.size() - 5);
    std::stringstream corrupt(bytes);
    CHECK_THROWS_AS(load_net(corrupt), TruncatedFile);
  }
}
