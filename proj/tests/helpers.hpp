#pragma once

// Shared fixtures and oracles for the test suite.

#include <cstdint>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "gsi/gsi.hpp"

namespace test_helpers {

inline gsi::Graph path_graph(std::size_t n) {
  gsi::Matrix a(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    a(i, i + 1) = 1.0;
    a(i + 1, i) = 1.0;
  }
  return gsi::Graph(std::move(a));
}

inline gsi::Graph cycle_graph(std::size_t n) {
  gsi::Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return gsi::Graph(std::move(a));
}

inline gsi::Graph complete_graph(std::size_t n, double w = 1.0) {
  gsi::Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) a(i, j) = w;
  return gsi::Graph(std::move(a));
}

/// Erdos-Renyi-style random graph with random positive weights; may be
/// disconnected.
inline gsi::Graph random_graph(std::size_t n, double edge_prob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  gsi::Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (uni(rng) < edge_prob) {
        const double w = 0.1 + uni(rng);
        a(i, j) = w;
        a(j, i) = w;
      }
  return gsi::Graph(std::move(a));
}

inline gsi::Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  gsi::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = gauss(rng);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

inline gsi::Vector random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  gsi::Vector x(n);
  for (double& v : x) v = gauss(rng);
  return x;
}

/// Union-find count of connected components — an oracle independent of any
/// spectral machinery.
inline std::size_t n_components(const gsi::Graph& g) {
  std::vector<std::size_t> parent(g.n_nodes());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  g.for_each_edge([&](std::size_t i, std::size_t j, double) { parent[find(i)] = find(j); });
  std::size_t count = 0;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) count += find(i) == i;
  return count;
}

/// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x0, double h = 1e-5) {
  return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

/// True when |got - want| <= max(abs_floor, rel * max(|got|, |want|)).
inline bool close(double got, double want, double rel, double abs_floor = 1e-8) {
  const double scale = std::max(std::abs(got), std::abs(want));
  return std::abs(got - want) <= std::max(abs_floor, rel * scale);
}

}  // namespace test_helpers
