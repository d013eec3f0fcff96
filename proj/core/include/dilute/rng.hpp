#pragma once

#include <cmath>
#include <cstdint>

namespace dilute {

// splitmix64; used both as a stream initializer and as the fixed seed-mixing
// hash for replica streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Replica r of master seed s draws from an independent stream. The mixing is
// part of the reproducibility contract: identical (seed, replica) must yield
// identical draws on every platform.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t replica) {
  std::uint64_t s = master ^ (0x9e3779b97f4a7c15ull * (replica + 1));
  return splitmix64(s);
}

// xoshiro256++ (Blackman/Vigna). Hand-rolled so that draws are bit-identical
// across standard libraries; std::uniform_real_distribution is not.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    for (auto& w : s_) w = splitmix64(seed);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on [0,1), 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on [a,b)
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Knuth product method, chunked so the e^{-lambda} threshold never
  // underflows. Exact in distribution by Poisson additivity.
  long poisson(double lambda) {
    long total = 0;
    while (lambda > 60.0) {
      total += poisson_knuth(60.0);
      lambda -= 60.0;
    }
    return total + poisson_knuth(lambda);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  long poisson_knuth(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t s_[4];
};

}  // namespace dilute
