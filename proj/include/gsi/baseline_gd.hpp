#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "gsi/errors.hpp"
#include "gsi/graph.hpp"
#include "gsi/observe.hpp"
#include "gsi/signal_ops.hpp"

namespace gsi {

struct GdConfig {
  double mu = 0.01;
  std::size_t max_iters = 40;
  double beta = 0.1;

  void validate() const {
    if (!(mu > 0.0)) throw ConfigError("gd.mu: must be positive");
    if (beta < 0.0) throw ConfigError("gd.beta: must be non-negative");
  }
};

/// J(x) = ||sbar - m . tanh(x)||_2^2 + beta * tv_l2(x)
inline double gd_loss(const Vector& x, const Observation& obs, const Graph& g, double beta) {
  if (x.size() != obs.size() || x.size() != g.n_nodes())
    throw DimensionMismatch("gd_loss: dimensions disagree");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = static_cast<double>(obs.signs[i]) - obs.mask[i] * std::tanh(x[i]);
    acc += r * r;
  }
  return acc + beta * tv_l2(g, x);
}

/// grad J = -2 m . (sbar - m . tanh(x)) . (1 - tanh(x)^2) + 2 beta L x
inline Vector gd_gradient(const Vector& x, const Observation& obs, const Graph& g, double beta) {
  if (x.size() != obs.size() || x.size() != g.n_nodes())
    throw DimensionMismatch("gd_gradient: dimensions disagree");
  Vector grad = tv_l2_gradient(g, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    grad[i] *= beta;
    if (obs.mask[i]) {
      const double th = std::tanh(x[i]);
      grad[i] += -2.0 * (static_cast<double>(obs.signs[i]) - th) * (1.0 - th * th);
    }
  }
  return grad;
}

struct GdResult {
  Vector x;
  std::vector<double> loss_trace;  // J at iterates 0..max_iters
};

/// Fixed-step gradient descent from x = 0, exactly max_iters steps. The
/// observer, when given, sees every iterate (including the initial one) so
/// callers can track per-iteration error.
inline GdResult gd_impute(const Observation& obs, const Graph& g, const GdConfig& cfg,
                          const std::function<void(std::size_t, const Vector&)>& observer = {}) {
  cfg.validate();
  GdResult result;
  result.x.assign(g.n_nodes(), 0.0);
  result.loss_trace.reserve(cfg.max_iters + 1);
  for (std::size_t iter = 0;; ++iter) {
    const double loss = gd_loss(result.x, obs, g, cfg.beta);
    if (!std::isfinite(loss)) throw DivergedLoss("gd_impute: non-finite loss");
    result.loss_trace.push_back(loss);
    if (observer) observer(iter, result.x);
    if (iter == cfg.max_iters) break;
    const Vector grad = gd_gradient(result.x, obs, g, cfg.beta);
    for (std::size_t i = 0; i < result.x.size(); ++i) result.x[i] -= cfg.mu * grad[i];
  }
  return result;
}

}  // namespace gsi
