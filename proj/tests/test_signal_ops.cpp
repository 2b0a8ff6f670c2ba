#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "gsi/gsi.hpp"
#include "helpers.hpp"

using namespace gsi;
namespace th = test_helpers;

TEST_CASE("tv_l2 basics", "[signal_ops]") {
  const Graph g2 = th::path_graph(2);
  SECTION("constant signal has zero variation") {
    const Graph g = th::random_graph(9, 0.4, 3);
    CHECK(tv_l2(g, Vector(9, 1.0)) == 0.0);
  }
  SECTION("2-node unit graph, x = (1, 0) gives 1") {
    CHECK_THAT(tv_l2(g2, {1.0, 0.0}), Catch::Matchers::WithinRel(1.0, 1e-12));
  }
  SECTION("quadratic homogeneity: tv(2y) = 4 tv(y)") {
    const Graph g = th::random_graph(11, 0.4, 5);
    const Vector y = th::random_vector(11, 17);
    Vector x = y;
    for (double& v : x) v *= 2.0;
    CHECK_THAT(tv_l2(g, x), Catch::Matchers::WithinRel(4.0 * tv_l2(g, y), 1e-12));
  }
  SECTION("length mismatch throws") {
    CHECK_THROWS_AS(tv_l2(g2, Vector(3, 0.0)), DimensionMismatch);
  }
}

TEST_CASE("tv_l2 edge sum agrees with the quadratic form x^T L x", "[signal_ops]") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const Graph g = th::random_graph(15, 0.35, seed);
    const Matrix l = laplacian(g);
    const Vector x = th::random_vector(15, seed + 100);
    const double edge_sum = tv_l2(g, x);
    const double quad_form = dot(x, matvec(l, x));
    CHECK(th::close(edge_sum, quad_form, 1e-9));
  }
}

TEST_CASE("tv_l0 counts edges with differing endpoints", "[signal_ops]") {
  const Graph tri = th::complete_graph(3);
  SECTION("constant signal gives 0") { CHECK(tv_l0(tri, Vector(3, 5.0)) == 0.0); }
  SECTION("x = (1,1,2) on the unit triangle gives 2") {
    CHECK(tv_l0(tri, {1.0, 1.0, 2.0}) == 2.0);
  }
  SECTION("infinite tolerance gives 0") {
    CHECK(tv_l0(tri, {1.0, -7.0, 2.0}, std::numeric_limits<double>::infinity()) == 0.0);
  }
}

TEST_CASE("tv_l1 is the weighted absolute-difference sum", "[signal_ops]") {
  const Graph g2 = th::path_graph(2);
  SECTION("constant signal gives 0") {
    const Graph g = th::random_graph(7, 0.5, 9);
    CHECK(tv_l1(g, Vector(7, -3.0)) == 0.0);
  }
  SECTION("2-node unit graph, x = (3, 1) gives 2") {
    CHECK_THAT(tv_l1(g2, {3.0, 1.0}), Catch::Matchers::WithinRel(2.0, 1e-12));
  }
  SECTION("absolute homogeneity: tv(2y) = 2 tv(y)") {
    const Graph g = th::random_graph(11, 0.4, 5);
    const Vector y = th::random_vector(11, 18);
    Vector x = y;
    for (double& v : x) v *= 2.0;
    CHECK_THAT(tv_l1(g, x), Catch::Matchers::WithinRel(2.0 * tv_l1(g, y), 1e-12));
  }
}

TEST_CASE("all TV flavours ignore constant shifts", "[signal_ops]") {
  const Graph g = th::random_graph(13, 0.4, 21);
  const Vector x = th::random_vector(13, 22);
  Vector shifted = x;
  for (double& v : shifted) v += 7.5;
  CHECK(th::close(tv_l2(g, shifted), tv_l2(g, x), 1e-9));
  CHECK(th::close(tv_l1(g, shifted), tv_l1(g, x), 1e-9));
  CHECK(tv_l0(g, shifted) == tv_l0(g, x));
}

TEST_CASE("tv_l2_gradient is 2Lx and matches finite differences", "[signal_ops]") {
  const Graph g = th::random_graph(10, 0.4, 33);
  const Vector x = th::random_vector(10, 34);
  const Vector grad = tv_l2_gradient(g, x);
  const Vector two_lx = matvec(laplacian(g), x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(th::close(grad[i], 2.0 * two_lx[i], 1e-10));
    Vector probe = x;
    const double fd = th::central_diff(
        [&](double v) {
          probe[i] = v;
          return tv_l2(g, probe);
        },
        x[i]);
    CHECK(th::close(grad[i], fd, 1e-6));
  }
}

TEST_CASE("gft basics", "[signal_ops]") {
  const SpectralDecomposition sd = spectral_decompose(laplacian(th::cycle_graph(8)));
  SECTION("x = v_k maps to the k-th standard basis vector") {
    for (std::size_t k : {0u, 3u, 7u}) {
      const Vector x_tilde = gft(sd, sd.eigenvector(k));
      for (std::size_t i = 0; i < 8; ++i)
        CHECK_THAT(x_tilde[i], Catch::Matchers::WithinAbs(i == k ? 1.0 : 0.0, 1e-8));
    }
  }
  SECTION("zero maps to zero") {
    CHECK(max_abs(gft(sd, Vector(8, 0.0))) == 0.0);
  }
  SECTION("Parseval: norms match") {
    const Vector x = th::random_vector(8, 55);
    CHECK(th::close(norm2(gft(sd, x)), norm2(x), 1e-9));
  }
  SECTION("inverse_gft undoes gft") {
    const Vector x = th::random_vector(8, 56);
    const Vector back = inverse_gft(sd, gft(sd, x));
    for (std::size_t i = 0; i < 8; ++i) CHECK(th::close(back[i], x[i], 1e-9));
  }
}

TEST_CASE("tv_l2 spectral identity: sum of lambda_k xtilde_k^2", "[signal_ops]") {
  for (std::uint64_t seed : {61u, 62u}) {
    const Graph g = th::random_graph(16, 0.3, seed);
    const SpectralDecomposition sd = spectral_decompose(laplacian(g));
    const Vector x = th::random_vector(16, seed + 5);
    const Vector x_tilde = gft(sd, x);
    double spectral = 0.0;
    for (std::size_t k = 0; k < 16; ++k) spectral += sd.eigenvalues[k] * x_tilde[k] * x_tilde[k];
    CHECK(th::close(tv_l2(g, x), spectral, 1e-8));
  }
}

TEST_CASE("bl_energy counts energy above the cutoff", "[signal_ops]") {
  const SpectralDecomposition sd = spectral_decompose(laplacian(th::cycle_graph(8)));
  SECTION("x = v_1 with K = 1 is fully bandlimited") {
    CHECK(bl_energy(sd, sd.eigenvector(0), 1) <= 1e-12);
  }
  SECTION("K = N leaves nothing above the cutoff") {
    CHECK(bl_energy(sd, th::random_vector(8, 70), 8) == 0.0);
  }
  SECTION("K = 0 gives the full squared norm") {
    const Vector x = th::random_vector(8, 71);
    CHECK(th::close(bl_energy(sd, x, 0), dot(x, x), 1e-9));
  }
  SECTION("monotone non-increasing in K") {
    const Vector x = th::random_vector(8, 72);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= 8; ++k) {
      const double e = bl_energy(sd, x, k);
      CHECK(e <= prev + 1e-12);
      prev = e;
    }
  }
  SECTION("K out of range throws") {
    CHECK_THROWS_AS(bl_energy(sd, Vector(8, 0.0), 9), InvalidK);
  }
}

TEST_CASE("bl_energy_gradient matches finite differences", "[signal_ops]") {
  const SpectralDecomposition sd = spectral_decompose(laplacian(th::random_graph(9, 0.4, 80)));
  const Vector x = th::random_vector(9, 81);
  const Vector grad = bl_energy_gradient(sd, x, 3);
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vector probe = x;
    const double fd = th::central_diff(
        [&](double v) {
          probe[i] = v;
          return bl_energy(sd, probe, 3);
        },
        x[i]);
    CHECK(th::close(grad[i], fd, 1e-6));
  }
}
