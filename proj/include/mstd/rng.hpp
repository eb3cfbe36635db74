#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "mstd/errors.hpp"

namespace mstd {

/// splitmix64 step. Used to derive independent sub-seeds from a master seed
/// so that streams for different purposes (env, weights, noise, ...) never
/// overlap and do not depend on the order in which components are created.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a hash of a short tag string, used to give each purpose its own
/// deterministic offset into the splitmix64 sequence.
inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic sub-seed for (master seed, purpose tag).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  std::uint64_t s = master ^ hash_tag(tag);
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

/// Uniform double in [0, 1). Uses the top 53 bits of one engine draw, so the
/// result is identical across platforms (std::uniform_real_distribution is
/// not required to be).
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// Standard normal via Box-Muller. Consumes exactly two engine draws and
/// keeps no state, again for cross-platform reproducibility.
inline double normal01(std::mt19937_64& gen) {
  double u1 = uniform01(gen);
  double u2 = uniform01(gen);
  // Guard u1 == 0 so the log stays finite.
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * M_PI * u2);
}

/// Uniform integer in [0, n). Rejection sampling on the top bits keeps the
/// distribution exact for any n.
inline std::uint64_t uniform_index(std::mt19937_64& gen, std::uint64_t n) {
  if (n == 0) throw ContractError("uniform_index: n must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % n;
}

}  // namespace mstd
