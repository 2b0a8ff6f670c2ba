#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <cstddef>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gsi/errors.hpp"
#include "gsi/linalg.hpp"
#include "gsi/observe.hpp"
#include "gsi/signal_ops.hpp"
#include "gsi/spectral.hpp"

namespace gsi {

/// Heat-kernel filtered Gaussian fields: x = V diag(exp(-decay*lambda)) V^T w
/// with w standard normal, each signal rescaled to max-abs 1. Larger decay
/// gives smoother signals.
inline std::vector<Vector> gen_smooth(const SpectralDecomposition& sd, std::size_t R,
                                      double filter_decay, std::uint64_t seed) {
  if (!(filter_decay >= 0.0)) throw InvalidDecay("gen_smooth: filter_decay must be >= 0");
  const std::size_t n = sd.n();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vector> signals;
  signals.reserve(R);
  for (std::size_t r = 0; r < R; ++r) {
    Vector w(n);
    for (double& v : w) v = gauss(rng);
    Vector coeffs = matvec_t(sd.eigenvectors, w);
    for (std::size_t k = 0; k < n; ++k) coeffs[k] *= std::exp(-filter_decay * sd.eigenvalues[k]);
    Vector x = matvec(sd.eigenvectors, coeffs);
    const double peak = max_abs(x);
    if (peak > 0.0)
      for (double& v : x) v /= peak;
    signals.push_back(std::move(x));
  }
  return signals;
}

/// x = sum_{k<=K} c_k v_k with c standard normal; K counts kept frequencies
/// 1-based, so every output has bl_energy(x, K) = 0 up to rounding.
inline std::vector<Vector> gen_bandlimited(const SpectralDecomposition& sd, std::size_t R,
                                           std::size_t K, std::uint64_t seed) {
  const std::size_t n = sd.n();
  if (K == 0 || K > n) throw InvalidK("gen_bandlimited: K must lie in [1, N]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vector> signals;
  signals.reserve(R);
  for (std::size_t r = 0; r < R; ++r) {
    Vector coeffs(n, 0.0);
    for (std::size_t k = 0; k < K; ++k) coeffs[k] = gauss(rng);
    signals.push_back(matvec(sd.eigenvectors, coeffs));
  }
  return signals;
}

/// Raw IDX file contents. Only uint8 payloads (dtype 0x08) are supported,
/// which covers the MNIST image and label files.
struct IdxFile {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;

  std::size_t count() const { return dims.empty() ? 0 : dims[0]; }
  std::size_t item_size() const {
    std::size_t s = 1;
    for (std::size_t d = 1; d < dims.size(); ++d) s *= dims[d];
    return s;
  }
};

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw TruncatedFile("load_idx: header ends early");
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

inline void write_u32_be(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>((v >> 24) & 0xff), static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
  out.write(b, 4);
}

}  // namespace detail

inline IdxFile load_idx(std::istream& in) {
  const std::uint32_t magic = detail::read_u32_be(in);
  if ((magic & 0xffff0000u) != 0) throw BadMagic("load_idx: magic does not start with 0x0000");
  const std::uint8_t dtype = static_cast<std::uint8_t>((magic >> 8) & 0xff);
  const std::uint8_t rank = static_cast<std::uint8_t>(magic & 0xff);
  if (dtype != 0x08) throw UnsupportedType("load_idx: only uint8 payloads supported");
  if (rank != 1 && rank != 3) throw UnsupportedType("load_idx: only rank-1 and rank-3 supported");
  IdxFile file;
  std::size_t total = 1;
  for (std::uint8_t d = 0; d < rank; ++d) {
    file.dims.push_back(detail::read_u32_be(in));
    total *= file.dims.back();
  }
  file.payload.resize(total);
  in.read(reinterpret_cast<char*>(file.payload.data()), static_cast<std::streamsize>(total));
  if (static_cast<std::size_t>(in.gcount()) != total)
    throw TruncatedFile("load_idx: payload shorter than header claims");
  return file;
}

inline void save_idx(const IdxFile& file, std::ostream& out) {
  const std::uint32_t magic = 0x00000800u | static_cast<std::uint32_t>(file.dims.size());
  detail::write_u32_be(out, magic);
  std::size_t total = 1;
  for (std::uint32_t d : file.dims) {
    detail::write_u32_be(out, d);
    total *= d;
  }
  if (total != file.payload.size()) throw DimensionMismatch("save_idx: dims/payload disagree");
  out.write(reinterpret_cast<const char*>(file.payload.data()),
            static_cast<std::streamsize>(file.payload.size()));
}

inline IdxFile load_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_idx: cannot open " + path);
  return load_idx(in);
}

inline void save_idx(const IdxFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_idx: cannot open " + path);
  save_idx(file, out);
}

/// Affine map raw -> [-1,1] domain plus its inverse. Stored so metrics can be
/// reported in the raw domain after training on normalized signals.
struct Normalization {
  double scale = 1.0;
  double offset = 0.0;

  double apply(double raw) const { return scale * raw + offset; }
  double invert(double normalized) const { return (normalized - offset) / scale; }

  Vector apply(const Vector& raw) const {
    Vector out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = apply(raw[i]);
    return out;
  }
  Vector invert(const Vector& normalized) const {
    Vector out(normalized.size());
    for (std::size_t i = 0; i < normalized.size(); ++i) out[i] = invert(normalized[i]);
    return out;
  }
};

/// Dataset-global affine normalization to [-1,1], using the min/max over all
/// entries of all signals.
inline std::pair<std::vector<Vector>, Normalization> normalize(const std::vector<Vector>& signals) {
  if (signals.empty()) throw EmptyDataset("normalize: no signals");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Vector& x : signals)
    for (double v : x) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) throw DegenerateRange("normalize: max equals min");
  Normalization norm;
  norm.scale = 2.0 / (hi - lo);
  norm.offset = -(hi + lo) / (hi - lo);
  std::vector<Vector> out;
  out.reserve(signals.size());
  for (const Vector& x : signals) out.push_back(norm.apply(x));
  return {std::move(out), norm};
}

struct Metrics {
  double rmse_observed = 0.0;
  double rmse_missing = 0.0;
  double rmse_all = 0.0;
};

/// RMSE between estimate and truth over the observed / missing / full index
/// sets given by the mask.
inline Metrics metrics(const Vector& estimate, const Vector& truth, const Mask& mask) {
  if (estimate.size() != truth.size() || estimate.size() != mask.size())
    throw DimensionMismatch("metrics: dimensions disagree");
  if (estimate.empty()) throw EmptyIndexSet("metrics: empty signal");
  double sq_obs = 0.0, sq_miss = 0.0;
  std::size_t n_obs = 0, n_miss = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - truth[i];
    if (mask[i]) {
      sq_obs += d * d;
      ++n_obs;
    } else {
      sq_miss += d * d;
      ++n_miss;
    }
  }
  if (n_obs == 0) throw EmptyIndexSet("metrics: no observed entries");
  if (n_miss == 0) throw EmptyIndexSet("metrics: no missing entries");
  Metrics m;
  m.rmse_observed = std::sqrt(sq_obs / static_cast<double>(n_obs));
  m.rmse_missing = std::sqrt(sq_miss / static_cast<double>(n_miss));
  m.rmse_all = std::sqrt((sq_obs + sq_miss) / static_cast<double>(estimate.size()));
  return m;
}

/// Ground-truth companion file: "GSGT1", N, R (u32 LE), then R*N float64 LE.
inline void save_ground_truth(const std::vector<Vector>& signals, std::ostream& out) {
  if (signals.empty()) throw EmptyDataset("save_ground_truth: no signals");
  const std::size_t n = signals.front().size();
  out.write("GSGT1", 5);
  detail::write_u32_le(out, static_cast<std::uint32_t>(n));
  detail::write_u32_le(out, static_cast<std::uint32_t>(signals.size()));
  auto write_f64 = [&](double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(b, 8);
  };
  for (const Vector& x : signals) {
    if (x.size() != n) throw DimensionMismatch("save_ground_truth: inconsistent N");
    for (double v : x) write_f64(v);
  }
}

inline std::vector<Vector> load_ground_truth(std::istream& in) {
  char magic[5];
  in.read(magic, 5);
  if (!in || std::string(magic, 5) != "GSGT1") throw BadMagic("load_ground_truth: bad header");
  const std::uint32_t n = detail::read_u32_le(in);
  const std::uint32_t r = detail::read_u32_le(in);
  auto read_f64 = [&]() {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw TruncatedFile("load_ground_truth: payload ends early");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
  };
  std::vector<Vector> signals(r, Vector(n));
  for (Vector& x : signals)
    for (double& v : x) v = read_f64();
  return signals;
}

inline void save_ground_truth(const std::vector<Vector>& signals, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_ground_truth: cannot open " + path);
  save_ground_truth(signals, out);
}

inline std::vector<Vector> load_ground_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_ground_truth: cannot open " + path);
  return load_ground_truth(in);
}

}  // namespace gsi
