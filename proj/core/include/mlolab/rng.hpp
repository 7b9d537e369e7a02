#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace mlolab {

// splitmix64 finalizer. Used to turn (seed, index...) paths into well mixed
// substream seeds so that runs dispatched in parallel never share state.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(base ^ 0x6d6c6f6c61620a00ULL);
  for (std::uint64_t p : path) {
    h = splitmix64(h ^ splitmix64(p));
  }
  return h;
}

// Deterministic random stream. mt19937_64 output is pinned by the standard,
// and the draw helpers below avoid std::*_distribution (whose algorithms are
// implementation defined), so sequences are reproducible across toolchains.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, n). Rejection sampling removes modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v >= threshold) return v % n;
    }
  }

  // Uniform on [0, 1), 53 bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Exponential with the given mean, in the same unit as the mean.
  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace mlolab
