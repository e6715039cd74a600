#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "macrograph/common.hpp"

namespace macrograph {

// All randomness in the project flows through these helpers.  The standard
// distributions (uniform_int_distribution etc.) are implementation-defined,
// so seeds would not reproduce across standard libraries; the raw mt19937_64
// stream does, and the maps below are fixed arithmetic on top of it.
using Rng = std::mt19937_64;

// Uniform in [0,1) with 53 random mantissa bits.
inline double uniform01(Rng& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform_in(Rng& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// Unbiased integer in [0,n) by rejection.
inline std::uint64_t uniform_index(Rng& g, std::uint64_t n) {
  if (n == 0) throw UsageError("uniform_index: n must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

// Fisher-Yates.
template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_index(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

// k distinct indices from [0,n), in selection order (partial Fisher-Yates).
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& g) {
  if (k > n) throw UsageError("sample_without_replacement: k exceeds n");
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t r = j + static_cast<std::size_t>(uniform_index(g, n - j));
    std::swap(pool[j], pool[r]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace macrograph
