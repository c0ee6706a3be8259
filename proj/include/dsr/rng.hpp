#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dsr {

// Deterministic random source. std::mt19937_64 is bit-exact across
// platforms; the distributions are written out here because the standard
// does not pin the algorithms behind std::uniform_*_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection sampling, unbiased.
  std::size_t below(std::size_t n) {
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return static_cast<std::size_t>(v % span);
  }

  // Standard normal via Box-Muller; the spare value is cached.
  double gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    has_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

  // Derives an independent child generator. Used to give each episode or
  // worker its own stream from one master seed.
  Rng split(std::uint64_t stream) const { return Rng(splitmix64(seed_ + 0x9e3779b97f4a7c15ull * (stream + 1))); }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dsr
