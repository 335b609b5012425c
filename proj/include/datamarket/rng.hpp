#pragma once

#include <cstdint>
#include <random>

namespace datamarket {

/// SplitMix64 finalizer applied to (seed, stream). Gives every Monte-Carlo
/// trial or simulated round its own independent seed, so results do not depend
/// on the order in which trials are evaluated.
std::uint64_t derive_subseed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// mt19937_64 with portable uniform and Gaussian draws. The standard library's
/// distributions are implementation-defined, so both transforms live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [lo, hi].
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace datamarket
