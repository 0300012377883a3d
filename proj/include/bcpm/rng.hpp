#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "bcpm/common.hpp"

namespace bcpm {

using Rng = std::mt19937_64;

// splitmix64; used to derive well-separated seeds from a root seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream-splitting convention: every consumer of randomness gets a seed
// derived from the root seed and a path of integer tags
// (root -> chain -> filter -> replication, etc.).  Mixing is splitmix64
// applied to the running state xor the next tag.
inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(root);
  for (std::uint64_t tag : path) s = splitmix64(s ^ tag);
  return s;
}

inline Rng make_rng(std::uint64_t root,
                    std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(root, path));
}

inline void fill_standard_normal(Rng& rng, double* data, std::size_t n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) data[i] = gauss(rng);
}

inline Vector standard_normal_vector(Rng& rng, int n) {
  Vector v(n);
  fill_standard_normal(rng, v.data(), static_cast<std::size_t>(n));
  return v;
}

}  // namespace bcpm
