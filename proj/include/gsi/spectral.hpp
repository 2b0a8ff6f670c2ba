#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gsi/errors.hpp"
#include "gsi/linalg.hpp"

namespace gsi {

/// Eigendecomposition of a symmetric matrix. Eigenvalues ascending,
/// eigenvectors stored as the columns of an orthonormal matrix, column k
/// matching eigenvalue k.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  std::size_t n() const { return eigenvalues.size(); }

  /// Column k as a vector.
  Vector eigenvector(std::size_t k) const {
    Vector v(n());
    for (std::size_t i = 0; i < n(); ++i) v[i] = eigenvectors(i, k);
    return v;
  }
};

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) acc += a(i, j) * a(i, j);
  return std::sqrt(acc);
}

}  // namespace detail

/// Cyclic Jacobi eigensolver for symmetric matrices. Deterministic and
/// dependency-free; fine for the desk-scale N used here. Converged when the
/// off-diagonal Frobenius norm drops below `conv_tol`.
inline SpectralDecomposition spectral_decompose(const Matrix& m, double sym_tol = 1e-10,
                                                double conv_tol = 1e-10,
                                                std::size_t max_sweeps = 100) {
  const std::size_t n = m.rows();
  if (n == 0 || m.cols() != n) throw DimensionMismatch("spectral_decompose: matrix must be square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > sym_tol)
        throw NotSymmetric("spectral_decompose: input is not symmetric");

  Matrix a = m;
  Matrix v = Matrix::identity(n);

  bool converged = false;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    if (detail::off_diagonal_norm(a) < conv_tol) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p);
        const double aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const double aip = a(i, p);
          const double aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(p, i) = a(i, p);
          a(i, q) = s * aip + c * aiq;
          a(q, i) = a(i, q);
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  if (!converged && detail::off_diagonal_norm(a) >= conv_tol)
    throw NoConvergence("spectral_decompose: Jacobi sweep budget exhausted");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  SpectralDecomposition sd;
  sd.eigenvalues.resize(n);
  sd.eigenvectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    sd.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) sd.eigenvectors(i, k) = v(i, order[k]);
  }
  // fix the sign of each column: largest-magnitude entry positive
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mag = std::abs(sd.eigenvectors(i, k));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (sd.eigenvectors(arg, k) < 0.0)
      for (std::size_t i = 0; i < n; ++i) sd.eigenvectors(i, k) = -sd.eigenvectors(i, k);
  }
  return sd;
}

}  // namespace gsi
