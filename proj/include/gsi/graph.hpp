#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gsi/errors.hpp"
#include "gsi/linalg.hpp"

namespace gsi {

/// Undirected weighted graph held as a dense symmetric adjacency matrix.
/// Immutable after construction; construction validates symmetry, zero
/// diagonal and non-negative weights.
class Graph {
 public:
  explicit Graph(Matrix adjacency) : adjacency_(std::move(adjacency)) {
    const std::size_t n = adjacency_.rows();
    if (n == 0 || adjacency_.cols() != n)
      throw DimensionMismatch("Graph: adjacency must be square and non-empty");
    for (std::size_t i = 0; i < n; ++i) {
      if (adjacency_(i, i) != 0.0) throw InvalidEntry("Graph: nonzero diagonal entry");
      for (std::size_t j = i + 1; j < n; ++j) {
        if (adjacency_(i, j) != adjacency_(j, i))
          throw NotSymmetric("Graph: adjacency is not symmetric");
        if (adjacency_(i, j) < 0.0) throw InvalidEntry("Graph: negative edge weight");
      }
    }
  }

  std::size_t n_nodes() const { return adjacency_.rows(); }
  const Matrix& adjacency() const { return adjacency_; }

  /// Visits each undirected edge once (i < j, nonzero weight).
  template <typename Fn>
  void for_each_edge(Fn&& fn) const {
    const std::size_t n = n_nodes();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (adjacency_(i, j) != 0.0) fn(i, j, adjacency_(i, j));
  }

  std::size_t n_edges() const {
    std::size_t e = 0;
    for_each_edge([&](std::size_t, std::size_t, double) { ++e; });
    return e;
  }

 private:
  Matrix adjacency_;
};

/// L = D - A with D = diag(A*1). Row sums of L vanish by construction.
inline Matrix laplacian(const Graph& g) {
  const std::size_t n = g.n_nodes();
  const Matrix& a = g.adjacency();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      degree += a(i, j);
      l(i, j) = -a(i, j);
    }
    l(i, i) = degree;
  }
  return l;
}

enum class KnnWeighting { binary, inverse_distance };

/// k-nearest-neighbour graph over row vectors of `points` (one row per node),
/// Euclidean distance, symmetrized with A <- max(A, A^T). Distance ties break
/// by ascending node index so construction is deterministic.
inline Graph knn_graph(const Matrix& points, std::size_t k,
                       KnnWeighting weighting = KnnWeighting::binary) {
  const std::size_t n = points.rows();
  if (n < 2) throw InvalidArchitecture("knn_graph: need at least two nodes");
  if (k == 0 || k >= n) throw InvalidK("knn_graph: require 1 <= k < n_nodes");

  Matrix a(n, n);
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      const double* pi = points.row(i);
      const double* pj = points.row(j);
      for (std::size_t f = 0; f < points.cols(); ++f) {
        const double diff = pi[f] - pj[f];
        d2 += diff * diff;
      }
      cand.emplace_back(d2, j);
    }
    std::sort(cand.begin(), cand.end());
    for (std::size_t r = 0; r < k; ++r) {
      const auto [d2, j] = cand[r];
      double w = 1.0;
      if (weighting == KnnWeighting::inverse_distance) {
        if (d2 == 0.0)
          throw DuplicatePoints("knn_graph: identical points with inverse_distance weighting");
        w = 1.0 / std::sqrt(d2);
      }
      a(i, j) = std::max(a(i, j), w);
    }
  }
  // union of directed k-NN edges
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = std::max(a(i, j), a(j, i));
      a(i, j) = w;
      a(j, i) = w;
    }
  return Graph(std::move(a));
}

/// Edge-list text format: header line "N <n_nodes>", then one line per
/// undirected edge "i j w" with 0-based indices.
inline void save_edge_list(const Graph& g, std::ostream& out) {
  out << "N " << g.n_nodes() << "\n";
  out.precision(std::numeric_limits<double>::max_digits10);
  g.for_each_edge([&](std::size_t i, std::size_t j, double w) { out << i << " " << j << " " << w << "\n"; });
}

inline void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_edge_list: cannot open " + path);
  save_edge_list(g, out);
}

inline Graph load_edge_list(std::istream& in) {
  std::string tag;
  std::size_t n = 0;
  if (!(in >> tag >> n) || tag != "N" || n == 0)
    throw IoError("load_edge_list: bad header, expected 'N <n_nodes>'");
  Matrix a(n, n);
  std::size_t i = 0, j = 0;
  double w = 0.0;
  while (in >> i >> j >> w) {
    if (i >= n || j >= n || i == j) throw InvalidEntry("load_edge_list: bad edge endpoints");
    if (w < 0.0) throw InvalidEntry("load_edge_list: negative weight");
    a(i, j) = w;
    a(j, i) = w;
  }
  if (!in.eof() && in.fail()) throw IoError("load_edge_list: malformed edge line");
  return Graph(std::move(a));
}

inline Graph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_edge_list: cannot open " + path);
  return load_edge_list(in);
}

}  // namespace gsi
