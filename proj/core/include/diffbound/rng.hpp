#pragma once

// Deterministic random streams. Each replicate derives its own stream from
// (master seed, stream ids), so numbers never depend on thread scheduling.
// All samplers are hand-rolled on top of xoshiro256++ to keep sequences
// identical across platforms and standard-library versions.

#include <array>
#include <cstdint>
#include <initializer_list>

namespace diffbound {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Collapse (master seed, ids...) into one stream seed.
inline std::uint64_t stream_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> ids) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t id : ids) {
    s = splitmix64(s ^ (0x9e3779b97f4a7c15ULL * (id + 1)));
  }
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s = splitmix64(s);
      w = s;
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform index in [0, n).
  std::int64_t index(std::int64_t n) {
    auto i = static_cast<std::int64_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  // Draw from {0, 1, 2} with probabilities (p0, p1, 1 - p0 - p1).
  int trinomial(double p0, double p1) {
    const double u = uniform();
    if (u < p0) return 0;
    if (u < p0 + p1) return 1;
    return 2;
  }

  double normal() { return normal_quantile(uniform()); }

  // Wichura's AS 241 (PPND16) inverse of the standard normal CDF.
  static double normal_quantile(double p);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace diffbound
