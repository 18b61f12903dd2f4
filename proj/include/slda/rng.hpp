#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace slda {

// Every random choice in the library draws from an engine seeded through
// derive_seed(master, purpose, index), so a single 64-bit master seed makes
// whole runs reproducible and independent components get independent streams.

using Rng = std::mt19937_64;

inline uint64_t mix64(uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, std::string_view purpose, uint64_t index = 0) {
  uint64_t h = mix64(master);
  for (char c : purpose) h = mix64(h ^ static_cast<uint64_t>(static_cast<unsigned char>(c)));
  return mix64(h ^ index);
}

inline uint64_t derive_seed(uint64_t master, std::string_view purpose, uint64_t i, uint64_t j) {
  return mix64(derive_seed(master, purpose, i) ^ mix64(j ^ 0xa5a5a5a5a5a5a5a5ULL));
}

// Uniform in [0,1). 53-bit resolution, identical on every platform.
inline double canonical(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform in (0,1); safe to pass through log().
inline double canonical_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform integer in [0, n). Rejection-free modulo is fine here: n is tiny
// relative to 2^64 in all call sites, and determinism matters more than the
// ~2^-50 bias.
inline uint64_t uniform_below(Rng& rng, uint64_t n) {
  return rng() % n;
}

template <typename T>
void shuffle_vector(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

double normal_sample(Rng& rng);
double gamma_sample(Rng& rng, double shape);
void dirichlet_sample(Rng& rng, double alpha, std::span<double> out);

}  // namespace slda
