#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gsi/errors.hpp"
#include "gsi/linalg.hpp"
#include "gsi/observe.hpp"

namespace gsi {

enum class Activation : std::uint8_t { identity = 0, tanh = 1, sigmoid = 2 };

inline double apply_activation(Activation act, double z) {
  switch (act) {
    case Activation::tanh: return std::tanh(z);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    default: return z;
  }
}

/// Derivative of the activation expressed through its output value a.
inline double activation_derivative(Activation act, double a) {
  switch (act) {
    case Activation::tanh: return 1.0 - a * a;
    case Activation::sigmoid: return a * (1.0 - a);
    default: return 1.0;
  }
}

struct Layer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::identity;

  std::size_t in_size() const { return weights.cols(); }
  std::size_t out_size() const { return weights.rows(); }
};

/// Small fully connected network. A net plus its optimizer state form a
/// single-writer unit; forward/backward never mutate the net.
struct DenseNet {
  std::vector<Layer> layers;
  std::string role;  // "generator" / "discriminator" / free-form tag

  std::size_t input_size() const { return layers.front().in_size(); }
  std::size_t output_size() const { return layers.back().out_size(); }
};

/// Cached activations from one forward pass (input batch plus each layer's
/// output), consumed by backward.
struct Tape {
  Matrix input;
  std::vector<Matrix> activations;
};

struct LayerGrads {
  Matrix weights;
  Vector bias;
};

struct NetGradients {
  std::vector<LayerGrads> layers;
  Matrix input;  // gradient with respect to the forward input batch
};

inline std::pair<Matrix, Tape> forward(const DenseNet& net, const Matrix& batch) {
  if (net.layers.empty()) throw InvalidArchitecture("forward: empty network");
  if (batch.cols() != net.input_size())
    throw DimensionMismatch("forward: batch width != input size");
  Tape tape;
  tape.input = batch;
  tape.activations.reserve(net.layers.size());
  const Matrix* current = &batch;
  for (const Layer& layer : net.layers) {
    Matrix out = matmul_nt(*current, layer.weights);
    for (std::size_t i = 0; i < out.rows(); ++i) {
      double* row = out.row(i);
      for (std::size_t j = 0; j < out.cols(); ++j)
        row[j] = apply_activation(layer.activation, row[j] + layer.bias[j]);
    }
    tape.activations.push_back(std::move(out));
    current = &tape.activations.back();
  }
  return {tape.activations.back(), std::move(tape)};
}

/// Reverse-mode chain rule. `output_grad` is d(loss)/d(output); the returned
/// gradients are exact for that scalar, with no hidden batch averaging.
inline NetGradients backward(const DenseNet& net, const Tape& tape, const Matrix& output_grad) {
  const std::size_t n_layers = net.layers.size();
  if (tape.activations.size() != n_layers || tape.input.cols() != net.input_size())
    throw StaleTape("backward: tape does not match network");
  if (!output_grad.same_shape(tape.activations.back()))
    throw StaleTape("backward: output_grad shape does not match forward output");

  NetGradients grads;
  grads.layers.resize(n_layers);

  Matrix delta = output_grad;
  for (std::size_t l = n_layers; l-- > 0;) {
    const Layer& layer = net.layers[l];
    const Matrix& out = tape.activations[l];
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      double* d = delta.row(i);
      const double* a = out.row(i);
      for (std::size_t j = 0; j < delta.cols(); ++j)
        d[j] *= activation_derivative(layer.activation, a[j]);
    }
    const Matrix& prev = l == 0 ? tape.input : tape.activations[l - 1];
    grads.layers[l].weights = matmul_tn(delta, prev);
    grads.layers[l].bias.assign(layer.out_size(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const double* d = delta.row(i);
      for (std::size_t j = 0; j < delta.cols(); ++j) grads.layers[l].bias[j] += d[j];
    }
    delta = matmul(delta, layer.weights);
  }
  grads.input = std::move(delta);
  return grads;
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam accumulators, shaped like the network parameters.
struct AdamState {
  std::vector<LayerGrads> m;
  std::vector<LayerGrads> v;
  long t = 0;
  AdamConfig config;

  static AdamState init(const DenseNet& net, AdamConfig cfg = {}) {
    AdamState state;
    state.config = cfg;
    for (const Layer& layer : net.layers) {
      state.m.push_back({Matrix(layer.out_size(), layer.in_size()), Vector(layer.out_size(), 0.0)});
      state.v.push_back({Matrix(layer.out_size(), layer.in_size()), Vector(layer.out_size(), 0.0)});
    }
    return state;
  }
};

namespace detail {

inline void adam_update(double lr, double b1, double b2, double eps, double corr1, double corr2,
                        double g, double& m, double& v, double& param) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g * g;
  const double m_hat = m / corr1;
  const double v_hat = v / corr2;
  param -= lr * m_hat / (std::sqrt(v_hat) + eps);
}

}  // namespace detail

inline void adam_step(DenseNet& net, AdamState& state, const NetGradients& grads) {
  if (state.m.size() != net.layers.size() || grads.layers.size() != net.layers.size())
    throw ShapeMismatch("adam_step: state/gradient layer count");
  ++state.t;
  const AdamConfig& c = state.config;
  const double corr1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double corr2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Layer& layer = net.layers[l];
    const LayerGrads& g = grads.layers[l];
    if (!g.weights.same_shape(layer.weights) || g.bias.size() != layer.bias.size())
      throw ShapeMismatch("adam_step: gradient shape");
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
      detail::adam_update(c.lr, c.beta1, c.beta2, c.eps, corr1, corr2, g.weights.data()[i],
                          state.m[l].weights.data()[i], state.v[l].weights.data()[i],
                          layer.weights.data()[i]);
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
      detail::adam_update(c.lr, c.beta1, c.beta2, c.eps, corr1, corr2, g.bias[i],
                          state.m[l].bias[i], state.v[l].bias[i], layer.bias[i]);
    if (!all_finite(layer.weights) || !all_finite(layer.bias))
      throw DivergedLoss("adam_step: non-finite parameter after update");
  }
}

/// Glorot-uniform weights (+-sqrt(6/(in+out))), zero biases, deterministic by
/// seed.
inline DenseNet init_params(const std::vector<std::size_t>& layer_dims,
                            const std::vector<Activation>& activations, std::uint64_t seed,
                            std::string role = {}) {
  if (layer_dims.size() < 2 || activations.size() != layer_dims.size() - 1)
    throw InvalidArchitecture("init_params: need dims d0..dL and one activation per layer");
  for (std::size_t d : layer_dims)
    if (d == 0) throw InvalidArchitecture("init_params: zero layer width");
  std::mt19937_64 rng(seed);
  DenseNet net;
  net.role = std::move(role);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t in = layer_dims[l];
    const std::size_t out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> uni(-bound, bound);
    Layer layer;
    layer.weights = Matrix(out, in);
    for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = uni(rng);
    layer.bias.assign(out, 0.0);
    layer.activation = activations[l];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

/// Checkpoint format: "GSNN1", layer count (u32 LE), then per layer
/// out/in/activation tag (u32 LE each), then weights row-major and bias as
/// little-endian float64.
inline void save_net(const DenseNet& net, std::ostream& out) {
  out.write("GSNN1", 5);
  detail::write_u32_le(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const Layer& layer : net.layers) {
    detail::write_u32_le(out, static_cast<std::uint32_t>(layer.out_size()));
    detail::write_u32_le(out, static_cast<std::uint32_t>(layer.in_size()));
    detail::write_u32_le(out, static_cast<std::uint32_t>(layer.activation));
  }
  auto write_f64 = [&](double value) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(value));
    std::memcpy(&bits, &value, sizeof(bits));
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(b, 8);
  };
  for (const Layer& layer : net.layers) {
    for (double w : layer.weights.data()) write_f64(w);
    for (double b : layer.bias) write_f64(b);
  }
}

inline DenseNet load_net(std::istream& in) {
  char magic[5];
  in.read(magic, 5);
  if (!in || std::string(magic, 5) != "GSNN1") throw BadMagic("load_net: bad header");
  const std::uint32_t n_layers = detail::read_u32_le(in);
  if (n_layers == 0) throw InvalidArchitecture("load_net: zero layers");
  DenseNet net;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::uint32_t out = detail::read_u32_le(in);
    const std::uint32_t in_dim = detail::read_u32_le(in);
    const std::uint32_t tag = detail::read_u32_le(in);
    if (out == 0 || in_dim == 0 || tag > 2) throw InvalidArchitecture("load_net: bad layer header");
    Layer layer;
    layer.weights = Matrix(out, in_dim);
    layer.bias.assign(out, 0.0);
    layer.activation = static_cast<Activation>(tag);
    net.layers.push_back(std::move(layer));
  }
  auto read_f64 = [&]() {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw TruncatedFile("load_net: parameter stream ends early");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
  };
  for (Layer& layer : net.layers) {
    for (double& w : layer.weights.data()) w = read_f64();
    for (double& b : layer.bias) b = read_f64();
  }
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l)
    if (net.layers[l].out_size() != net.layers[l + 1].in_size())
      throw InvalidArchitecture("load_net: layer dimensions do not chain");
  return net;
}

inline void save_net(const DenseNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_net: cannot open " + path);
  save_net(net, out);
}

inline DenseNet load_net(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_net: cannot open " + path);
  return load_net(in);
}

}  // namespace gsi
