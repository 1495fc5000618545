#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace contlearn {

/// 64-bit FNV-1a over the raw bytes of `bytes`.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent seed for a named sub-stream of a run, e.g.
/// derive_seed(run_seed, "train", step). Stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0) noexcept;

/// Random priority of a sample under a seed. Taking the m smallest priorities
/// of a set is a uniform draw of m elements without replacement, and the
/// draw does not depend on the order in which the set is presented.
std::uint64_t priority_key(std::uint64_t seed, std::string_view id) noexcept;

/// Portable RNG: mt19937_64 output is fixed by the standard, the
/// distributions below are ours so results do not depend on the stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace contlearn
