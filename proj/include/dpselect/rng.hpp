#pragma once

// Deterministic pseudo-random streams for reproducible experiments.
//
// Every generator is derived from a (seed, stream) pair: the pair is expanded
// through a SplitMix64 chain into an independent xoshiro256++ state, so a
// per-trial generator can be rebuilt from just a master seed and a trial
// index.  Results are therefore bit-identical regardless of how trials are
// scheduled across threads.

#include <array>
#include <cmath>
#include <cstdint>

namespace dpselect {
namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

inline std::uint64_t xoshiro256pp_next(std::array<std::uint64_t, 4>& s) {
  const std::uint64_t result = rotl64(s[0] + s[3], 23) + s[0];
  const std::uint64_t t = s[1] << 17;
  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = rotl64(s[3], 45);
  return result;
}

}  // namespace detail

// Inverse distribution function of the standard Laplace law (density
// exp(-|x|)/2), mapping u in (0,1) to a Laplace variate.
inline double laplace_from_unit(double u) {
  return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    reseed(seed, stream);
  }

  void reseed(std::uint64_t seed, std::uint64_t stream) {
    // Scramble the stream index before it touches the seed so that streams
    // 0,1,2,... are no more correlated than arbitrary seeds.
    std::uint64_t t = stream;
    std::uint64_t sm = seed ^ detail::splitmix64_next(t);
    for (auto& word : state_) word = detail::splitmix64_next(sm);
    // xoshiro256++ needs a nonzero state; four zero outputs in a row cannot
    // happen for this chain, but guard against it anyway.
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0)
      state_[3] = 0x9e3779b97f4a7c15ULL;
    have_spare_ = false;
    spare_ = 0.0;
  }

  std::uint64_t next_u64() { return detail::xoshiro256pp_next(state_); }

  // Uniform double strictly inside (0,1): 53 random bits centered on the
  // half-step, so 0 and 1 are unreachable and logs of u and 1-u are safe.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the Marsaglia polar method; the paired variate is
  // cached so consecutive calls cost one rejection loop per two draws.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, r2;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      r2 = u * u + v * v;
    } while (r2 >= 1.0 || r2 == 0.0);
    const double f = std::sqrt(-2.0 * std::log(r2) / r2);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // Standard Laplace variate (unit scale, variance 2).
  double next_laplace() { return laplace_from_unit(next_unit()); }

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dpselect
