#pragma once

#include <cstdint>
#include <random>

namespace epg {

// explicitly seeded generator; every stochastic operation takes a seed so
// results are reproducible byte for byte
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform on the open interval (0, 1); 53-bit resolution, never 0 or 1,
  // safe to feed into quantile functions
  double uniform() {
    std::uint64_t bits = eng_() >> 11;
    double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    return u;
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

// derives an independent stream seed (splitmix64 finalizer), so that
// substreams indexed by b never collide for a fixed master seed a
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace epg
