#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>

namespace poseaug {

/// Counter-based, splittable random stream.
///
/// Algorithm (fixed, so other implementations can reproduce every draw):
///   mix64(z)   = SplitMix64 finalizer:
///                z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///                z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///                z ^ (z >> 31)
///   root key   = mix64(seed ^ 0x706F73656175674BULL)
///   draw i     = mix64(key + i * 0x9E3779B97F4A7C15), i = 1, 2, ...
///   split(t)   = stream with key mix64(key ^ mix64(t + 0x9E3779B97F4A7C15)), counter 0
///   split(s)   = split(FNV-1a-64(s))
///   uniform()  = (draw >> 11) * 2^-53, in [0, 1)
///   int [a,b]  = a + floor(draw * (b - a + 1) / 2^64)  (128-bit multiply)
///   normal()   = Box-Muller on (1 - uniform(), uniform()), cosine branch only
///
/// Splitting depends only on the key, never on how many draws were made,
/// so streams for (epoch, sample, path) can be derived independently.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : key_(mix64(seed ^ 0x706F73656175674BULL)) {}

  [[nodiscard]] RandomStream split(std::uint64_t tag) const {
    RandomStream child;
    child.key_ = mix64(key_ ^ mix64(tag + kGamma));
    return child;
  }

  [[nodiscard]] RandomStream split(std::string_view name) const { return split(fnv1a(name)); }

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    __extension__ using u128 = unsigned __int128;
    const auto range = static_cast<u128>(static_cast<std::uint64_t>(hi - lo) + 1U);
    const auto scaled = (static_cast<u128>(next_u64()) * range) >> 64;
    return lo + static_cast<std::int64_t>(scaled);
  }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Fisher-Yates; defined here because std::shuffle is not portable across standard libraries.
  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    return h;
  }

 private:
  RandomStream() = default;

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace poseaug
