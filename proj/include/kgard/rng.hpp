#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace kgard {

/// Reproducible random stream built on std::mt19937_64, whose output sequence
/// is fixed by the C++ standard. The standard distributions are
/// implementation-defined, so every transform below is written out here.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal (Box-Muller; the second variate is cached).
  double normal();
  /// Exp(1).
  double exponential();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  /// Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi);
  /// +1 or -1 with equal probability.
  double sign();
  /// k distinct values from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kgard
