#pragma once

// Deterministic random source shared by every module.
//
// Generator: xoshiro256** (Blackman & Vigna). The four state words are filled
// from a SplitMix64 sequence started at `seed + stream * 0xD1B54A32D192ED03`
// (mod 2^64), so one seed can feed several uncorrelated streams.
//
// Uniform doubles take the top 53 bits: (next() >> 11) * 2^-53, in [0, 1).
//
// Normal variates use the Marsaglia polar form of Box-Muller: draw
// u, v = 2*uniform - 1 until 0 < s = u^2 + v^2 < 1, then return u*f and cache
// v*f for the next call, with f = sqrt(-2 ln(s) / s).
//
// Bounded integers in [0, n) use rejection below (2^64 - n) mod n followed by
// r mod n. std::uniform_int_distribution is avoided because its output is
// implementation-defined.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>

#include "fiberforge/errors.hpp"

namespace fiberforge {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Named streams so independent consumers of one seed never share draws.
enum class Stream : std::uint64_t {
  kDataset = 0,
  kSplit = 1,
  kInit = 2,
  kValidationSplit = 3,
  kEpochShuffle = 4,
  kTest = 99,
};

class Rng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kStreamMultiplier = 0xD1B54A32D192ED03ULL;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed + stream * kStreamMultiplier;
    for (auto& word : state_) word = splitmix64_next(sm);
  }
  Rng(std::uint64_t seed, Stream stream)
      : Rng(seed, static_cast<std::uint64_t>(stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return next(); }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("Rng::bounded: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  double standard_normal() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    return u * f;
  }

  /// Fisher-Yates, walking from the back.
  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(bounded(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  std::optional<double> spare_;
};

/// mean + std * z with z from the polar transform. Always consumes a variate,
/// so the stream position does not depend on std.
inline double gaussian_sample(Rng& rng, double mean, double std) {
  if (!(std >= 0.0)) throw InvalidArgument("gaussian_sample: std must be >= 0");
  return mean + std * rng.standard_normal();
}

}  // namespace fiberforge
