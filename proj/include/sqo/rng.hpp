#ifndef SQO_RNG_HPP
#define SQO_RNG_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

namespace sqo {

// mt19937_64 and seed_seq are fully specified by the standard, and the two
// draw helpers below avoid the implementation-defined std distributions, so
// a (seed, trial) pair replays the same stream on every platform.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

// Stream for trial k of a batch seeded with master_seed.
inline Rng make_trial_rng(std::uint64_t master_seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(trial),
                    static_cast<std::uint32_t>(trial >> 32), 0x5351u};
  return Rng(seq);
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on {0, ..., n-1}; rejection sampling keeps it exactly uniform.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = Rng::max() - (Rng::max() % range);
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return static_cast<std::size_t>(v % range);
}

// Standard normal via Box-Muller, again to stay off std::normal_distribution.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace sqo

#endif  // SQO_RNG_HPP
