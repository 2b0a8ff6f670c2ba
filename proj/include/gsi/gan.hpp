#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gsi/errors.hpp"
#include "gsi/graph.hpp"
#include "gsi/linalg.hpp"
#include "gsi/neural.hpp"
#include "gsi/observe.hpp"
#include "gsi/signal_ops.hpp"
#include "gsi/spectral.hpp"

namespace gsi {

enum class RegularizerKind { tv_l2, bl_energy };

struct GanConfig {
  double alpha = 10.0;
  double beta = 0.1;  // 0 recovers the GAIN-style ablation
  std::size_t batch_size = 64;
  std::size_t epochs = 200;
  std::size_t d_steps_per_g_step = 1;
  double tau = 0.5;  // temperature of the tanh(./tau) stand-in for sign
  double lr_g = 1e-3;
  double lr_d = 1e-3;
  std::uint64_t rng_seed = 0;
  RegularizerKind regularizer = RegularizerKind::tv_l2;
  std::size_t bl_cutoff = 1;                 // K when regularizer == bl_energy
  std::vector<std::size_t> hidden = {256, 128};
  bool combine_observed = false;  // feed the discriminator sbar at observed nodes

  void validate() const {
    if (alpha < 0.0) throw ConfigError("gan.alpha: must be non-negative");
    if (beta < 0.0) throw ConfigError("gan.beta: must be non-negative");
    if (batch_size == 0) throw ConfigError("gan.batch_size: must be positive");
    if (epochs == 0) throw ConfigError("gan.epochs: must be positive");
    if (d_steps_per_g_step == 0) throw ConfigError("gan.d_steps_per_g_step: must be positive");
    if (!(tau > 0.0)) throw ConfigError("gan.tau: must be positive");
    if (lr_g < 0.0) throw ConfigError("gan.lr_g: must be non-negative");
    if (lr_d < 0.0) throw ConfigError("gan.lr_d: must be non-negative");
    if (hidden.empty()) throw ConfigError("gan.hidden: need at least one hidden width");
    for (std::size_t h : hidden)
      if (h == 0) throw ConfigError("gan.hidden: zero width");
  }
};

/// The smoothness penalty attached to the generator. Either the quadratic
/// total variation of a graph or the high-band energy above a spectral
/// cutoff; both are differentiable.
class GraphRegularizer {
 public:
  static GraphRegularizer total_variation(Graph g) {
    GraphRegularizer reg;
    reg.kind_ = RegularizerKind::tv_l2;
    reg.n_ = g.n_nodes();
    reg.graph_.emplace(std::move(g));
    return reg;
  }

  static GraphRegularizer bandlimited(const SpectralDecomposition& sd, std::size_t cutoff) {
    if (cutoff > sd.n()) throw InvalidK("GraphRegularizer: cutoff must lie in [0, N]");
    GraphRegularizer reg;
    reg.kind_ = RegularizerKind::bl_energy;
    reg.n_ = sd.n();
    reg.high_band_ = Matrix(sd.n(), sd.n() - cutoff);
    for (std::size_t i = 0; i < sd.n(); ++i)
      for (std::size_t k = cutoff; k < sd.n(); ++k)
        reg.high_band_(i, k - cutoff) = sd.eigenvectors(i, k);
    return reg;
  }

  static GraphRegularizer from_config(const GanConfig& cfg, const Graph& g,
                                      const SpectralDecomposition* sd = nullptr) {
    if (cfg.regularizer == RegularizerKind::tv_l2) return total_variation(g);
    if (sd == nullptr)
      throw ConfigError("gan.regularizer: bl_energy needs a spectral decomposition");
    return bandlimited(*sd, cfg.bl_cutoff);
  }

  RegularizerKind kind() const { return kind_; }
  std::size_t n() const { return n_; }

  double value(const Vector& x) const {
    if (x.size() != n_) throw DimensionMismatch("GraphRegularizer::value: signal length");
    if (kind_ == RegularizerKind::tv_l2) return tv_l2(*graph_, x);
    const Vector proj = matvec_t(high_band_, x);
    return dot(proj, proj);
  }

  Vector gradient(const Vector& x) const {
    if (x.size() != n_) throw DimensionMismatch("GraphRegularizer::gradient: signal length");
    if (kind_ == RegularizerKind::tv_l2) return tv_l2_gradient(*graph_, x);
    Vector grad = matvec(high_band_, matvec_t(high_band_, x));
    for (double& v : grad) v *= 2.0;
    return grad;
  }

 private:
  RegularizerKind kind_ = RegularizerKind::tv_l2;
  std::size_t n_ = 0;
  std::optional<Graph> graph_;
  Matrix high_band_;
};

namespace detail {

inline double clamp_probability(double p) { return std::clamp(p, 1e-7, 1.0 - 1e-7); }

inline double hard_sign(double v) { return v >= 0.0 ? 1.0 : -1.0; }

}  // namespace detail

/// Generator input [sbar ; (1-m).z]: signs in the first half, noise gated to
/// the unobserved nodes in the second.
inline Vector make_generator_input(const Observation& obs, const Vector& z) {
  const std::size_t n = obs.size();
  if (z.size() != n) throw DimensionMismatch("make_generator_input: noise length");
  Vector input(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    input[i] = static_cast<double>(obs.signs[i]);
    input[n + i] = obs.mask[i] ? 0.0 : z[i];
  }
  return input;
}

inline Vector generate(const DenseNet& gen, const Vector& input) {
  if (input.size() != gen.input_size()) throw DimensionMismatch("generate: input width");
  Matrix batch(1, input.size());
  std::copy(input.begin(), input.end(), batch.row(0));
  const Matrix out = forward(gen, batch).first;
  return Vector(out.row(0), out.row(0) + out.cols());
}

/// Hint vector: the true mask everywhere except the chosen node, which is set
/// to 0.5.
inline Vector make_hint(const Mask& mask, std::size_t hint_node) {
  if (hint_node >= mask.size()) throw IndexOutOfRange("make_hint: hint node out of range");
  Vector h(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) h[i] = static_cast<double>(mask[i]);
  h[hint_node] = 0.5;
  return h;
}

/// Discriminator forward pass on [q ; h] where q is sign(xhat) when hard, or
/// the tanh(./tau) surrogate when gradients must flow to the generator.
inline Vector discriminate(const DenseNet& disc, const Vector& xhat, const Vector& hint,
                           double tau, bool hard) {
  const std::size_t n = xhat.size();
  if (hint.size() != n) throw DimensionMismatch("discriminate: hint length");
  if (disc.input_size() != 2 * n) throw DimensionMismatch("discriminate: network width");
  Matrix batch(1, 2 * n);
  double* row = batch.row(0);
  for (std::size_t i = 0; i < n; ++i) {
    row[i] = hard ? detail::hard_sign(xhat[i]) : std::tanh(xhat[i] / tau);
    row[n + i] = hint[i];
  }
  const Matrix out = forward(disc, batch).first;
  return Vector(out.row(0), out.row(0) + out.cols());
}

/// Cross entropy of the hinted node's probability against its mask bit.
inline double loss_d(double p_n, std::uint8_t m_n) {
  const double p = detail::clamp_probability(p_n);
  return -(m_n * std::log(p) + (1.0 - m_n) * std::log(1.0 - p));
}

/// Generator's adversarial term: pushes p_n up at unobserved hinted nodes.
inline double loss_g1(double p_n, std::uint8_t m_n) {
  const double p = detail::clamp_probability(p_n);
  return -(1.0 - m_n) * std::log(p);
}

/// Sign-fidelity term sum_i m_i (sbar_i - sigma(xhat_i))^2 with sigma = sign
/// (hard, evaluation) or tanh(./tau) (training surrogate).
inline double loss_g2(const SignVector& signs, const Mask& mask, const Vector& xhat, double tau,
                      bool hard = false) {
  if (signs.size() != mask.size() || signs.size() != xhat.size())
    throw DimensionMismatch("loss_g2: dimensions disagree");
  double acc = 0.0;
  for (std::size_t i = 0; i < xhat.size(); ++i) {
    if (!mask[i]) continue;
    const double s = hard ? detail::hard_sign(xhat[i]) : std::tanh(xhat[i] / tau);
    const double d = static_cast<double>(signs[i]) - s;
    acc += d * d;
  }
  return acc;
}

inline double loss_g2(const Observation& obs, const Vector& xhat, double tau, bool hard = false) {
  return loss_g2(obs.signs, obs.mask, xhat, tau, hard);
}

inline double loss_g3(const GraphRegularizer& reg, const Vector& xhat) { return reg.value(xhat); }

/// One optimization step's inputs: a batch of observations with fresh noise
/// and fresh hint nodes.
struct StepBatch {
  std::vector<const Observation*> observations;
  Matrix noise;                         // B x N
  std::vector<std::size_t> hint_nodes;  // B

  std::size_t size() const { return observations.size(); }
};

namespace detail {

inline Matrix generator_input_batch(const StepBatch& batch, std::size_t n) {
  Matrix input(batch.size(), 2 * n);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const Observation& obs = *batch.observations[r];
    if (obs.size() != n) throw DimensionMismatch("step batch: observation length");
    double* row = input.row(r);
    const double* z = batch.noise.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      row[i] = static_cast<double>(obs.signs[i]);
      row[n + i] = obs.mask[i] ? 0.0 : z[i];
    }
  }
  return input;
}

/// Discriminator input rows [q ; h]. When `surrogate` is null, q is the hard
/// sign of xhat; otherwise q = surrogate (already tanh(xhat/tau)). With
/// combine_observed, observed entries carry sbar instead of q.
inline Matrix discriminator_input_batch(const StepBatch& batch, const Matrix& xhat,
                                        const Matrix* surrogate, bool combine_observed) {
  const std::size_t n = xhat.cols();
  Matrix input(batch.size(), 2 * n);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const Observation& obs = *batch.observations[r];
    double* row = input.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      double q = surrogate ? (*surrogate)(r, i) : hard_sign(xhat(r, i));
      if (combine_observed && obs.mask[i]) q = static_cast<double>(obs.signs[i]);
      row[i] = q;
      row[n + i] = static_cast<double>(obs.mask[i]);
    }
    row[n + batch.hint_nodes[r]] = 0.5;
  }
  return input;
}

}  // namespace detail

/// Mean cross-entropy of the discriminator over the batch's hinted nodes,
/// with the generator frozen. Fills `grads` (w.r.t. the discriminator) when
/// non-null.
inline double discriminator_objective(const DenseNet& gen, const DenseNet& disc,
                                      const StepBatch& batch, const GanConfig& cfg,
                                      NetGradients* grads = nullptr) {
  if (batch.size() == 0) throw EmptyDataset("discriminator_objective: empty batch");
  const std::size_t n = gen.output_size();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  const Matrix gen_in = detail::generator_input_batch(batch, n);
  const Matrix xhat = forward(gen, gen_in).first;
  const Matrix disc_in = detail::discriminator_input_batch(batch, xhat, nullptr, cfg.combine_observed);
  auto [probs, tape] = forward(disc, disc_in);

  double loss = 0.0;
  Matrix dprobs(batch.size(), n);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const std::size_t hint = batch.hint_nodes[r];
    const std::uint8_t m = batch.observations[r]->mask[hint];
    const double p = detail::clamp_probability(probs(r, hint));
    loss += loss_d(p, m);
    dprobs(r, hint) = (-m / p + (1.0 - m) / (1.0 - p)) * inv_b;
  }
  loss *= inv_b;
  if (grads) *grads = backward(disc, tape, dprobs);
  return loss;
}

struct GeneratorLosses {
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;

  double total(const GanConfig& cfg) const { return g1 + cfg.alpha * g2 + cfg.beta * g3; }
};

/// Mean generator objective L_g1 + alpha L_g2 + beta L_g3 over the batch,
/// using the tanh(./tau) surrogate wherever sign would block gradients. Fills
/// `grads` (w.r.t. the generator) when non-null.
inline GeneratorLosses generator_objective(const DenseNet& gen, const DenseNet& disc,
                                           const StepBatch& batch, const GanConfig& cfg,
                                           const GraphRegularizer& reg,
                                           NetGradients* grads = nullptr) {
  if (batch.size() == 0) throw EmptyDataset("generator_objective: empty batch");
  const std::size_t n = gen.output_size();
  const std::size_t b = batch.size();
  const double inv_b = 1.0 / static_cast<double>(b);

  const Matrix gen_in = detail::generator_input_batch(batch, n);
  auto [xhat, gen_tape] = forward(gen, gen_in);

  Matrix surrogate(b, n);
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t i = 0; i < n; ++i) surrogate(r, i) = std::tanh(xhat(r, i) / cfg.tau);

  const Matrix disc_in = detail::discriminator_input_batch(batch, xhat, &surrogate, cfg.combine_observed);
  auto [probs, disc_tape] = forward(disc, disc_in);

  GeneratorLosses losses;
  Matrix dprobs(b, n);
  for (std::size_t r = 0; r < b; ++r) {
    const std::size_t hint = batch.hint_nodes[r];
    const std::uint8_t m = batch.observations[r]->mask[hint];
    const double p = detail::clamp_probability(probs(r, hint));
    losses.g1 += loss_g1(p, m);
    dprobs(r, hint) = -(1.0 - m) / p * inv_b;
    const Observation& obs = *batch.observations[r];
    for (std::size_t i = 0; i < n; ++i) {
      if (!obs.mask[i]) continue;
      const double d = static_cast<double>(obs.signs[i]) - surrogate(r, i);
      losses.g2 += d * d;
    }
    losses.g3 += reg.value(Vector(xhat.row(r), xhat.row(r) + n));
  }
  losses.g1 *= inv_b;
  losses.g2 *= inv_b;
  losses.g3 *= inv_b;

  if (grads) {
    // adversarial path: through the discriminator input, then the surrogate
    const Matrix ddisc_in = backward(disc, disc_tape, dprobs).input;
    Matrix dxhat(b, n);
    for (std::size_t r = 0; r < b; ++r) {
      const Observation& obs = *batch.observations[r];
      const double* din = ddisc_in.row(r);
      double* dx = dxhat.row(r);
      const Vector row_grad = reg.gradient(Vector(xhat.row(r), xhat.row(r) + n));
      for (std::size_t i = 0; i < n; ++i) {
        const double t = surrogate(r, i);
        const double dsurr = (1.0 - t * t) / cfg.tau;
        double acc = 0.0;
        if (!(cfg.combine_observed && obs.mask[i])) acc += din[i] * dsurr;
        if (obs.mask[i])
          acc += cfg.alpha * inv_b * 2.0 * (static_cast<double>(obs.signs[i]) - t) * (-dsurr);
        acc += cfg.beta * inv_b * row_grad[i];
        dx[i] = acc;
      }
    }
    *grads = backward(gen, gen_tape, dxhat);
  }
  return losses;
}

struct EpochLosses {
  double loss_d = 0.0;
  double loss_g1 = 0.0;
  double loss_g2 = 0.0;
  double loss_g3 = 0.0;
};

struct TrainerState {
  DenseNet generator;
  DenseNet discriminator;
  AdamState generator_opt;
  AdamState discriminator_opt;
  std::vector<EpochLosses> history;  // one entry per completed epoch
  GanConfig config;

  double generator_total(const EpochLosses& e) const {
    return e.loss_g1 + config.alpha * e.loss_g2 + config.beta * e.loss_g3;
  }
};

using EpochCallback = std::function<void(std::size_t epoch, const TrainerState&)>;

/// Alternating mini-batch training of the minimax objective: per batch,
/// d_steps_per_g_step discriminator updates followed by one generator update,
/// with fresh noise and fresh hint nodes at every step. Deterministic for a
/// given config and seed.
inline TrainerState train(const std::vector<Observation>& dataset, const GraphRegularizer& reg,
                          const GanConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (dataset.empty()) throw EmptyDataset("train: empty dataset");
  const std::size_t n = reg.n();
  for (const Observation& obs : dataset)
    if (obs.size() != n) throw DimensionMismatch("train: observation length != graph size");

  std::mt19937_64 rng(cfg.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> node(0, n - 1);

  std::vector<std::size_t> dims;
  dims.push_back(2 * n);
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(n);
  std::vector<Activation> gen_acts(dims.size() - 1, Activation::tanh);
  std::vector<Activation> disc_acts(dims.size() - 1, Activation::tanh);
  disc_acts.back() = Activation::sigmoid;

  TrainerState state;
  state.config = cfg;
  state.generator = init_params(dims, gen_acts, rng(), "generator");
  state.discriminator = init_params(dims, disc_acts, rng(), "discriminator");
  state.generator_opt = AdamState::init(state.generator, {.lr = cfg.lr_g});
  state.discriminator_opt = AdamState::init(state.discriminator, {.lr = cfg.lr_d});

  const std::size_t r_total = dataset.size();
  std::vector<std::size_t> order(r_total);
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto draw_batch = [&](std::size_t begin, std::size_t end) {
    StepBatch batch;
    const std::size_t b = end - begin;
    batch.observations.reserve(b);
    batch.noise = Matrix(b, n);
    batch.hint_nodes.resize(b);
    for (std::size_t r = 0; r < b; ++r) {
      batch.observations.push_back(&dataset[order[begin + r]]);
      double* z = batch.noise.row(r);
      for (std::size_t i = 0; i < n; ++i) z[i] = gauss(rng);
      batch.hint_nodes[r] = node(rng);
    }
    return batch;
  };

  NetGradients grads;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLosses sums;
    std::size_t d_steps = 0, g_steps = 0;
    for (std::size_t begin = 0; begin < r_total; begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, r_total);
      for (std::size_t step = 0; step < cfg.d_steps_per_g_step; ++step) {
        const StepBatch batch = draw_batch(begin, end);
        sums.loss_d += discriminator_objective(state.generator, state.discriminator, batch, cfg, &grads);
        adam_step(state.discriminator, state.discriminator_opt, grads);
        ++d_steps;
      }
      const StepBatch batch = draw_batch(begin, end);
      const GeneratorLosses gl =
          generator_objective(state.generator, state.discriminator, batch, cfg, reg, &grads);
      adam_step(state.generator, state.generator_opt, grads);
      sums.loss_g1 += gl.g1;
      sums.loss_g2 += gl.g2;
      sums.loss_g3 += gl.g3;
      ++g_steps;
    }
    EpochLosses means;
    means.loss_d = sums.loss_d / static_cast<double>(d_steps);
    means.loss_g1 = sums.loss_g1 / static_cast<double>(g_steps);
    means.loss_g2 = sums.loss_g2 / static_cast<double>(g_steps);
    means.loss_g3 = sums.loss_g3 / static_cast<double>(g_steps);
    if (!std::isfinite(means.loss_d) || !std::isfinite(means.loss_g1) ||
        !std::isfinite(means.loss_g2) || !std::isfinite(means.loss_g3))
      throw DivergedLoss("train: non-finite epoch-mean loss");
    state.history.push_back(means);
    if (on_epoch) on_epoch(epoch, state);
  }
  return state;
}

/// x_hat = G([sbar ; (1-m).z]); pure inference, no parameter mutation.
inline Vector impute(const TrainerState& state, const Observation& obs, const Vector& z) {
  return generate(state.generator, make_generator_input(obs, z));
}

/// Loss history CSV: epoch, loss_d, loss_g1, loss_g2, loss_g3, loss_g_total.
inline void write_loss_history_csv(const TrainerState& state, std::ostream& out) {
  out << "epoch,loss_d,loss_g1,loss_g2,loss_g3,loss_g_total\n";
  out << std::setprecision(12);
  for (std::size_t e = 0; e < state.history.size(); ++e) {
    const EpochLosses& h = state.history[e];
    out << (e + 1) << ',' << h.loss_d << ',' << h.loss_g1 << ',' << h.loss_g2 << ',' << h.loss_g3
        << ',' << state.generator_total(h) << "\n";
  }
}

inline void write_loss_history_csv(const TrainerState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_loss_history_csv: cannot open " + path);
  write_loss_history_csv(state, out);
}

}  // namespace gsi
