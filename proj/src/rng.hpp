#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace matrixrl {

// SplitMix64 step. Used for seeding and for key mixing when deriving
// substreams; never used as the main generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// xoshiro256** generator with deterministic, platform-independent output.
/// All sampling helpers are implemented here rather than with <random>
/// distributions so that identical seeds give identical streams everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller without caching the second variate; keeps the draw count
  // per call fixed, which makes substream accounting trivial.
  double normal() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Substream derivation rule: chain the base seed through SplitMix64 with the
// FNV-1a hash of a purpose label and up to three numeric keys. Documented in
// the README; every random decision in the library flows through this.
inline Rng substream(std::uint64_t seed, std::string_view purpose, std::uint64_t a = 0,
                     std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = seed;
  (void)splitmix64(s);
  s ^= fnv1a(purpose);
  (void)splitmix64(s);
  s ^= a;
  (void)splitmix64(s);
  s ^= b;
  (void)splitmix64(s);
  s ^= c;
  return Rng(splitmix64(s));
}

// Marsaglia-Tsang gamma sampler; the alpha < 1 case uses the boost trick.
inline double sample_gamma(Rng& rng, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("sample_gamma: alpha must be positive");
  if (alpha < 1.0) {
    const double u = 1.0 - rng.uniform01();
    return sample_gamma(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - rng.uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// Weights on the probability simplex, Dirichlet(alpha, ..., alpha).
inline std::vector<double> sample_simplex(Rng& rng, int n, double alpha) {
  std::vector<double> w(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& v : w) {
    v = sample_gamma(rng, alpha);
    total += v;
  }
  if (total <= 0.0) {  // numerically impossible for alpha not absurdly small
    for (auto& v : w) v = 1.0 / n;
    return w;
  }
  for (auto& v : w) v /= total;
  return w;
}

}  // namespace matrixrl
