#pragma once

#include <cstdint>
#include <vector>

namespace styloprof {

// splitmix64. Seeded behaviour is part of the artifact contract (identical
// seeds must reproduce identical splits/models on any platform), so we do
// not rely on implementation-defined <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform index in [0, n). n == 0 returns 0.
  std::size_t index(std::size_t n) {
    if (n <= 1) return 0;
    // rejection sampling to stay unbiased
    std::uint64_t limit = ~0ULL - (~0ULL % n);
    std::uint64_t v;
    do { v = next(); } while (v >= limit);
    return static_cast<std::size_t>(v % n);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream for (seed, salt...) tuples, e.g. one RNG
// per epoch or per tree.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  Rng r(seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL));
  return r.next();
}

}  // namespace styloprof
