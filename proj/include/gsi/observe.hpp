#pragma once

#include <cstdint>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "gsi/errors.hpp"
#include "gsi/linalg.hpp"

namespace gsi {

using Mask = std::vector<std::uint8_t>;       // entries 0/1
using SignVector = std::vector<std::int8_t>;  // entries -1/0/+1

/// Masked one-bit observation of a graph signal: signs_i is the sign of the
/// signal where mask_i = 1 and zero elsewhere.
struct Observation {
  Mask mask;
  SignVector signs;

  Observation() = default;
  Observation(Mask m, SignVector s) : mask(std::move(m)), signs(std::move(s)) {
    if (mask.size() != signs.size()) throw DimensionMismatch("Observation: mask/signs length");
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const bool observed = mask[i] == 1;
      const bool nonzero = signs[i] == 1 || signs[i] == -1;
      if (mask[i] > 1) throw InvalidEntry("Observation: mask entry outside {0,1}");
      if (observed != nonzero || (!observed && signs[i] != 0))
        throw InvalidEntry("Observation: signs inconsistent with mask");
    }
  }

  std::size_t size() const { return mask.size(); }
};

/// Entry-wise sign with the sign(0) := +1 convention.
inline SignVector quantize(const Vector& x) {
  SignVector s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] >= 0.0 ? 1 : -1;
  return s;
}

inline Observation apply_mask(const SignVector& s, const Mask& m) {
  if (s.size() != m.size()) throw DimensionMismatch("apply_mask: lengths disagree");
  SignVector masked(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    masked[i] = static_cast<std::int8_t>(m[i] * s[i]);
  return Observation(m, std::move(masked));
}

/// I.i.d. Bernoulli(p_observe) mask, deterministic for a given seed.
inline Mask sample_mask(std::size_t n, double p_observe, std::uint64_t seed) {
  if (!(p_observe > 0.0) || p_observe > 1.0)
    throw InvalidProbability("sample_mask: p_observe must lie in (0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p_observe);
  Mask m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = coin(rng) ? 1 : 0;
  return m;
}

inline Mask infer_mask(const SignVector& sbar) {
  Mask m(sbar.size());
  for (std::size_t i = 0; i < sbar.size(); ++i) {
    if (sbar[i] != -1 && sbar[i] != 0 && sbar[i] != 1)
      throw InvalidEntry("infer_mask: entry outside {-1,0,+1}");
    m[i] = sbar[i] != 0 ? 1 : 0;
  }
  return m;
}

namespace detail {

inline void write_u32_le(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw TruncatedFile("read_u32_le: unexpected end of stream");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

/// Observation dataset stream: "GSOB1", N, R (both u32 LE), then R records of
/// N signed bytes.
inline void save_observations(const std::vector<Observation>& obs, std::ostream& out) {
  if (obs.empty()) throw EmptyDataset("save_observations: no records");
  const std::size_t n = obs.front().size();
  out.write("GSOB1", 5);
  detail::write_u32_le(out, static_cast<std::uint32_t>(n));
  detail::write_u32_le(out, static_cast<std::uint32_t>(obs.size()));
  for (const Observation& o : obs) {
    if (o.size() != n) throw DimensionMismatch("save_observations: inconsistent N");
    out.write(reinterpret_cast<const char*>(o.signs.data()), static_cast<std::streamsize>(n));
  }
}

inline std::vector<Observation> load_observations(std::istream& in) {
  char magic[5];
  in.read(magic, 5);
  if (!in || std::string(magic, 5) != "GSOB1") throw BadMagic("load_observations: bad header");
  const std::uint32_t n = detail::read_u32_le(in);
  const std::uint32_t r = detail::read_u32_le(in);
  std::vector<Observation> obs;
  obs.reserve(r);
  for (std::uint32_t rec = 0; rec < r; ++rec) {
    SignVector s(n);
    in.read(reinterpret_cast<char*>(s.data()), n);
    if (!in) throw TruncatedFile("load_observations: record stream ends early");
    obs.emplace_back(infer_mask(s), std::move(s));
  }
  return obs;
}

inline void save_observations(const std::vector<Observation>& obs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_observations: cannot open " + path);
  save_observations(obs, out);
}

inline std::vector<Observation> load_observations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_observations: cannot open " + path);
  return load_observations(in);
}

}  // namespace gsi
