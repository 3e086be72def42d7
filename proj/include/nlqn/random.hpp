#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace nlqn::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent per-unit stream seed derived from a master seed, so parallel
// experiment units are reproducible regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t unit) {
  return splitmix64(master ^ splitmix64(unit + 1));
}

// Uniform on [0,1) with 53 bits. Avoids std::uniform_real_distribution, whose
// draw sequence is implementation-defined; streams must be stable for the
// byte-identical trace guarantee.
inline double uniform_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(gen);
}

// Box-Muller with the partner draw cached.
class NormalSampler {
 public:
  double next(std::mt19937_64& gen) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_unit(gen);
    while (u1 <= 0.0) u1 = uniform_unit(gen);
    const double u2 = uniform_unit(gen);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline double standard_normal(std::mt19937_64& gen) {
  NormalSampler s;
  return s.next(gen);
}

}  // namespace nlqn::rng
