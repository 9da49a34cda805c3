#include "kgard/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "kgard/errors.hpp"

namespace kgard {

double SeededRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform_open() {
  double u = 0.0;
  while (u == 0.0) u = uniform();
  return u;
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double SeededRng::exponential() { return -std::log(uniform_open()); }

std::size_t SeededRng::index(std::size_t n) {
  if (n == 0) throw ArgumentError("index: empty range");
  const std::uint64_t range = n;
  // Reject the incomplete top block so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range + 1) % range;
  std::uint64_t v = next_u64();
  while (v > limit) v = next_u64();
  return static_cast<std::size_t>(v % range);
}

std::int64_t SeededRng::integer(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ArgumentError("integer: empty range");
  return lo + static_cast<std::int64_t>(index(static_cast<std::size_t>(hi - lo) + 1));
}

double SeededRng::sign() { return (next_u64() >> 63) != 0 ? 1.0 : -1.0; }

std::vector<std::size_t> SeededRng::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n) throw ArgumentError("cannot sample more items than the population holds");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace kgard
