#pragma once

#include <cstdint>
#include <random>

namespace wipt {

/// Deterministic random source. Uniform and normal draws are derived from
/// raw 64-bit engine output by fixed formulas, so the same seed yields the
/// same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream for Monte Carlo run `index` under a master seed.
  /// Streams depend only on (seed, index), never on execution order.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  double uniform();           // [0, 1)
  double uniform_open();      // (0, 1)
  double normal();            // N(0, 1)
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace wipt
