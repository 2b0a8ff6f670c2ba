#pragma once

#include <cmath>
#include <cstddef>

#include "gsi/errors.hpp"
#include "gsi/graph.hpp"
#include "gsi/spectral.hpp"

namespace gsi {

namespace detail {

inline void check_signal(const Graph& g, const Vector& x, const char* op) {
  if (x.size() != g.n_nodes()) throw DimensionMismatch(std::string(op) + ": signal length != n_nodes");
}

}  // namespace detail

/// Quadratic total variation: sum over edges of A_ij (x_i - x_j)^2, which
/// equals x^T L x.
inline double tv_l2(const Graph& g, const Vector& x) {
  detail::check_signal(g, x, "tv_l2");
  double acc = 0.0;
  g.for_each_edge([&](std::size_t i, std::size_t j, double w) {
    const double d = x[i] - x[j];
    acc += w * d * d;
  });
  return acc;
}

/// Weighted count of edges whose endpoints differ by more than `tol`.
inline double tv_l0(const Graph& g, const Vector& x, double tol = 1e-9) {
  detail::check_signal(g, x, "tv_l0");
  double acc = 0.0;
  g.for_each_edge([&](std::size_t i, std::size_t j, double w) {
    if (std::abs(x[i] - x[j]) > tol) acc += w;
  });
  return acc;
}

inline double tv_l1(const Graph& g, const Vector& x) {
  detail::check_signal(g, x, "tv_l1");
  double acc = 0.0;
  g.for_each_edge([&](std::size_t i, std::size_t j, double w) { acc += w * std::abs(x[i] - x[j]); });
  return acc;
}

/// Gradient of tv_l2 with respect to x: 2 L x, computed edge-wise.
inline Vector tv_l2_gradient(const Graph& g, const Vector& x) {
  detail::check_signal(g, x, "tv_l2_gradient");
  Vector grad(x.size(), 0.0);
  g.for_each_edge([&](std::size_t i, std::size_t j, double w) {
    const double d = 2.0 * w * (x[i] - x[j]);
    grad[i] += d;
    grad[j] -= d;
  });
  return grad;
}

/// Graph Fourier transform: x_tilde = V^T x.
inline Vector gft(const SpectralDecomposition& sd, const Vector& x) {
  if (x.size() != sd.n()) throw DimensionMismatch("gft: signal length != decomposition size");
  return matvec_t(sd.eigenvectors, x);
}

inline Vector inverse_gft(const SpectralDecomposition& sd, const Vector& x_tilde) {
  if (x_tilde.size() != sd.n()) throw DimensionMismatch("inverse_gft: length != decomposition size");
  return matvec(sd.eigenvectors, x_tilde);
}

/// Energy of x in the frequencies above K: sum_{k > K} x_tilde_k^2 with k
/// counted 1-based, so K = 0 gives the full energy and K = N gives zero.
inline double bl_energy(const SpectralDecomposition& sd, const Vector& x, std::size_t K) {
  if (x.size() != sd.n()) throw DimensionMismatch("bl_energy: signal length != decomposition size");
  if (K > sd.n()) throw InvalidK("bl_energy: K must lie in [0, N]");
  const Vector x_tilde = gft(sd, x);
  double acc = 0.0;
  for (std::size_t k = K; k < x_tilde.size(); ++k) acc += x_tilde[k] * x_tilde[k];
  return acc;
}

/// Gradient of bl_energy with respect to x: 2 * V_{>K} V_{>K}^T x.
inline Vector bl_energy_gradient(const SpectralDecomposition& sd, const Vector& x, std::size_t K) {
  if (x.size() != sd.n()) throw DimensionMismatch("bl_energy_gradient: length != decomposition size");
  if (K > sd.n()) throw InvalidK("bl_energy_gradient: K must lie in [0, N]");
  Vector x_tilde = gft(sd, x);
  for (std::size_t k = 0; k < K; ++k) x_tilde[k] = 0.0;
  Vector grad = inverse_gft(sd, x_tilde);
  for (double& v : grad) v *= 2.0;
  return grad;
}

}  // namespace gsi
