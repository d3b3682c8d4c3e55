#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace bmnet {

// Seeded generator with platform-independent draws. The standard
// distributions are implementation-defined, so every draw here is derived
// directly from mt19937_64 output bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // U[0, 1)
  double uniform();
  // U[lo, hi)
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  double normal();
  bool coin() { return (engine_() >> 63) != 0; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Derives an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace bmnet
