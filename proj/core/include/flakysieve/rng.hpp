#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace flakysieve {

// Seeded generator with distributions implemented locally, so a seed
// produces the same stream regardless of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.
  double normal();

  bool coin() { return (next() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Derives an independent seed for a named sub-stream (splitmix64 over the
// base seed mixed with an FNV-1a hash of the name).
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream);

}  // namespace flakysieve
