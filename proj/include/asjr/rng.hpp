#pragma once

#include <cmath>
#include <cstdint>

namespace asjr {

/* Deterministic random streams. The C++ standard pins mt19937 but not the
 * distribution algorithms, so both the generator (xoshiro256++) and the
 * samplers live here; identical seeds give identical streams on any
 * conforming compiler. Child streams are derived from a master seed plus
 * integer tags via splitmix64, so every link/agent/purpose owns an
 * independent stream. */

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/* Stable seed mixing: order-sensitive in (a, b, c). */
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = seed;
  (void)splitmix64_next(s);
  s ^= 0x5851f42d4c957f2dull * (a + 1);
  (void)splitmix64_next(s);
  s ^= 0x14057b7ef767814full * (b + 1);
  (void)splitmix64_next(s);
  s ^= 0x27d4eb2f165667c5ull * (c + 1);
  return splitmix64_next(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64_next(sm);
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

  /* uniform in [0, 1), 53-bit resolution */
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /* uniform integer in [0, n), n >= 1 */
  std::uint32_t uniform_below(std::uint32_t n) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  double normal(double mean, double stddev) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    /* Box-Muller; u1 in (0,1] so the log is finite */
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + stddev * r * std::cos(theta);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/* Stream purposes; keeps derived seeds collision-free across subsystems. */
enum class StreamKind : std::uint64_t {
  Trial = 1,        // per-trial master
  LinkDelay = 2,    // (sender, receiver)
  LinkCorrupt = 3,  // (sender, receiver)
  Compute = 4,      // (agent)
  Malevolent = 5,   // (agent)
};

inline Rng derive_stream(std::uint64_t master, StreamKind kind,
                         std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(mix_seed(master, static_cast<std::uint64_t>(kind), a, b));
}

}  // namespace asjr
