#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace recinv::util {

/// 64-bit FNV-1a. Stable across platforms and runs.
std::uint64_t stable_hash(std::string_view bytes);

/// SplitMix64 finalizer; used to derive independent seeds and hash streams.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of a per-user substream: master_seed XOR stable_hash(user_id).
std::uint64_t substream_seed(std::uint64_t master_seed, std::string_view key);

/// Seeded generator with platform-independent draws.
///
/// The standard distributions are implementation-defined, so bounded
/// integers and unit reals are derived here directly from mt19937_64 output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Uniform real in [0, 1) with 53 random bits.
  double unit();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace recinv::util
