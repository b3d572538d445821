#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace sbp {

/// Generator used for every sampling decision in the library.
using Rng = std::mt19937_64;

/// Recorded in run metadata so results can be reproduced elsewhere.
inline constexpr const char* kRngIdentity = "mt19937_64";

/// Uniform integer in [0, bound). Rejection sampling on the raw 64-bit
/// output, so the stream is identical across standard library vendors
/// (std::uniform_int_distribution is not).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % bound;
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Bernoulli(1/2) from the top bit.
inline bool fair_coin(Rng& rng) { return (rng() >> 63) != 0; }

/// Standard normal via the Box-Muller transform. Vendor-independent,
/// unlike std::normal_distribution. Each call consumes two draws.
inline double standard_normal(Rng& rng) {
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline constexpr const char* kNormalSampler = "box-muller";

}  // namespace sbp
