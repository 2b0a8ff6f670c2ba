#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "gsi/gsi.hpp"
#include "helpers.hpp"

using namespace gsi;
namespace th = test_helpers;

TEST_CASE("quantize maps reals to signs with sign(0) = +1", "[observe]") {
  SECTION("mixed entries") {
    const SignVector s = quantize({0.5, -2.0, 0.0});
    CHECK(s == SignVector{1, -1, 1});
  }
  SECTION("all positive maps to all +1") {
    const SignVector s = quantize({3.0, 0.25, 1e-9});
    CHECK(s == SignVector{1, 1, 1});
  }
  SECTION("idempotent when reapplied to its own output") {
    const Vector x = th::random_vector(50, 7);
    const SignVector once = quantize(x);
    Vector as_reals(once.begin(), once.end());
    CHECK(quantize(as_reals) == once);
  }
}

TEST_CASE("apply_mask zeroes unobserved entries", "[observe]") {
  SECTION("example") {
    const Observation obs = apply_mask({1, -1}, {0, 1});
    CHECK(obs.signs == SignVector{0, -1});
    CHECK(obs.mask == Mask{0, 1});
  }
  SECTION("full mask keeps s") {
    const Observation obs = apply_mask({1, -1, 1}, {1, 1, 1});
    CHECK(obs.signs == SignVector{1, -1, 1});
  }
  SECTION("empty mask zeroes everything") {
    const Observation obs = apply_mask({1, -1, 1}, {0, 0, 0});
    CHECK(obs.signs == SignVector{0, 0, 0});
  }
  SECTION("length mismatch throws") {
    CHECK_THROWS_AS(apply_mask({1, -1}, {1}), DimensionMismatch);
  }
}

TEST_CASE("Observation construction enforces the mask/sign coupling", "[observe]") {
  CHECK_THROWS_AS(Observation({1, 0}, {1, 1}), InvalidEntry);   // masked node with |s| = 1
  CHECK_THROWS_AS(Observation({1, 1}, {1, 0}), InvalidEntry);   // observed node with s = 0
  CHECK_THROWS_AS(Observation({1}, {1, 0}), DimensionMismatch);
  CHECK_NOTHROW(Observation({1, 0, 1}, {1, 0, -1}));
}

TEST_CASE("sample_mask behaviour", "[observe]") {
  SECTION("p = 1 observes everything") {
    const Mask m = sample_mask(64, 1.0, 5);
    for (std::uint8_t b : m) CHECK(b == 1);
  }
  SECTION("p = 0.5 observed fraction within 0.5 +- 0.02 at n = 10^4") {
    const Mask m = sample_mask(10000, 0.5, 11);
    std::size_t observed = 0;
    for (std::uint8_t b : m) observed += b;
    const double fraction = static_cast<double>(observed) / 10000.0;
    CHECK(fraction > 0.48);
    CHECK(fraction < 0.52);
  }
  SECTION("same seed gives the same mask") {
    CHECK(sample_mask(100, 0.3, 42) == sample_mask(100, 0.3, 42));
  }
  SECTION("invalid probabilities throw") {
    CHECK_THROWS_AS(sample_mask(10, 0.0, 1), InvalidProbability);
    CHECK_THROWS_AS(sample_mask(10, -0.5, 1), InvalidProbability);
    CHECK_THROWS_AS(sample_mask(10, 1.5, 1), InvalidProbability);
  }
}

TEST_CASE("infer_mask reads the mask off the signed vector", "[observe]") {
  SECTION("example") {
    CHECK(infer_mask({1, 0, -1}) == Mask{1, 0, 1});
  }
  SECTION("all zeros") {
    CHECK(infer_mask({0, 0, 0}) == Mask{0, 0, 0});
  }
  SECTION("entries outside {-1,0,1} throw") {
    CHECK_THROWS_AS(infer_mask({2, 0}), InvalidEntry);
    CHECK_THROWS_AS(infer_mask({-3, 1}), InvalidEntry);
  }
}

TEST_CASE("quantize/apply_mask/infer_mask roundtrip", "[observe]") {
  // signals from a continuous distribution have no exact zeros, so the mask
  // is always recoverable
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const Vector x = th::random_vector(32, rng());
    const Mask m = sample_mask(32, 0.5, rng());
    const Observation obs = apply_mask(quantize(x), m);
    CHECK(infer_mask(obs.signs) == m);
  }
}

TEST_CASE("observation files roundtrip through GSOB1", "[observe]") {
  std::mt19937_64 rng(9);
  std::vector<Observation> data;
  for (int r = 0; r < 12; ++r)
    data.push_back(apply_mask(quantize(th::random_vector(20, rng())), sample_mask(20, 0.6, rng())));

  std::stringstream buffer;
  save_observations(data, buffer);

  SECTION("header layout: magic, N, R little-endian") {
    const std::string bytes = buffer.str();
    REQUIRE(bytes.size() == 5 + 4 + 4 + 12 * 20);
    CHECK(bytes.substr(0, 5) == "GSOB1");
    CHECK(static_cast<unsigned char>(bytes[5]) == 20);  // N = 20 LE
    CHECK(static_cast<unsigned char>(bytes[6]) == 0);
    CHECK(static_cast<unsigned char>(bytes[9]) == 12);  // R = 12 LE
  }
  SECTION("roundtrip") {
    const std::vector<Observation> back = load_observations(buffer);
    REQUIRE(back.size() == data.size());
    for (std::size_t r = 0; r < data.size(); ++r) {
      CHECK(back[r].signs == data[r].signs);
      CHECK(back[r].mask == data[r].mask);
    }
  }
  SECTION("bad magic throws") {
    std::stringstream corrupt("XSOB1moredata");
    CHECK_THROWS_AS(load_observations(corrupt), BadMagic);
  }
  SECTION("truncated record stream throws") {
    std::string bytes = buffer.str();
    bytes.resize(bytes.size() - 3);
    std::stringstream corrupt(bytes);
    CHECK_THROWS_AS(load_observations(corrupt), TruncatedFile);
  }
}
