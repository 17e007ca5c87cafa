#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>

namespace bfma {

// Seeded random stream. mt19937_64 supplies the bit stream; the
// distribution transforms are written out here because the std::
// distribution classes are implementation-defined and reruns must be
// byte-identical.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53 bits of precision.
  double uniform01() { return (gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (one value per call).
  double normal() {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    int i = static_cast<int>(uniform01() * n);
    return i < n ? i : n - 1;
  }

  // Inverse-CDF draw from weights w[0..n); weights must be nonnegative
  // and sum to something positive.
  int categorical(const double* w, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w[i];
    if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
    double u = uniform01() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

  uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

// SplitMix64 finalizer, used to derive independent child seeds from a
// base seed plus a path of indices (run id, episode, stream tag, ...).
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> path) {
  uint64_t h = mix64(base);
  for (uint64_t p : path) h = mix64(h ^ p);
  return h;
}

}  // namespace bfma
