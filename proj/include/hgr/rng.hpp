#pragma once

// Portable counter-based random streams.
//
// Every stream is identified by a 64-bit key. The i-th output of a stream is
// splitmix64_mix(key + (i + 1) * 0x9E3779B97F4A7C15), i.e. SplitMix64 run as
// a counter-mode generator. Keys for nested contexts are derived by folding
// each component through the same mixer (see derive_key). Integer draws use
// rejection sampling and gaussians use Box-Muller on 53-bit uniforms, so the
// sequence of values is identical on every platform and standard library.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace hgr {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t key = 0x243F6A8885A308D3ULL;
  for (std::uint64_t p : parts) {
    key = splitmix64_mix(key + kGoldenGamma) ^ splitmix64_mix(p + 0x13198A2E03707344ULL);
  }
  return key;
}

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t next() {
    ++counter_;
    return splitmix64_mix(key_ + counter_ * kGoldenGamma);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = (~std::uint64_t{0} / bound) * bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hgr
