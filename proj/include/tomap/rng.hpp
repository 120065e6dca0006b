#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace tomap {

/// Seeded random stream with platform-independent output.
///
/// std::mt19937_64 is bit-exact by the standard, but the <random>
/// distributions are not, so the conversions to uniform and normal
/// variates live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent stream derived from a base seed (splitmix64 mixing).
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform in (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal (Marsaglia polar method).
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace tomap
