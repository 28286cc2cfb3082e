#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace nnr {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based 64-bit generator. Output k is mix64(key + k * golden), so
/// substreams keyed by (master seed, index) are independent of draw order in
/// other streams. Uniform and normal variates are generated here rather than
/// through <random> distributions so results are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  /// Independent stream for replication `index` under `master`.
  static Rng substream(std::uint64_t master, std::uint64_t index) {
    return Rng(mix64(master) ^ mix64(index * 0x9e3779b97f4a7c15ULL + 0x3c6ef372fe94f82bULL));
  }

  std::uint64_t next() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix64(key_ + counter_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do u = uniform();
    while (u == 0.0);
    return u;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, m).
  std::uint64_t below(std::uint64_t m) {
    // Lemire's multiply-shift with rejection
    std::uint64_t x = next();
    __uint128_t prod = static_cast<__uint128_t>(x) * m;
    auto low = static_cast<std::uint64_t>(prod);
    if (low < m) {
      const std::uint64_t thresh = (0 - m) % m;
      while (low < thresh) {
        x = next();
        prod = static_cast<__uint128_t>(x) * m;
        low = static_cast<std::uint64_t>(prod);
      }
    }
    return static_cast<std::uint64_t>(prod >> 64);
  }

  /// Standard normal (Box-Muller, both outputs used).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  bool bernoulli(double prob) { return uniform() < prob; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nnr
