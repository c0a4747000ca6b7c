#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace semgest::nd {

// Seeded generator with platform-independent output: the engine is
// std::mt19937_64 and the float transforms are fixed here instead of relying
// on the implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a, used for deterministic per-word seeds and config hashes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 14695981039346656037ull);

// Derives an independent stream seed from a base seed and a label.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

}  // namespace semgest::nd
