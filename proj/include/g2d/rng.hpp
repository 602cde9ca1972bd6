#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace g2d {

// splitmix64 step; used for seed expansion and stream derivation.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t hash_str(std::string_view s) {
  // FNV-1a 64-bit
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent stream seed from a master seed and a path of tags.
// Rollout workers, per-task generators etc. each get their own stream so
// results do not depend on scheduling order.
inline uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> path) {
  uint64_t s = master;
  for (uint64_t p : path) {
    s ^= 0x9e3779b97f4a7c15ULL + p;
    (void)splitmix64(s);
    s = splitmix64(s);
  }
  return s;
}

// xoshiro256** -- hand-rolled so sampled streams are identical across
// compilers and platforms (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53 bits of precision.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0,n); rejection sampling, exact for any n >= 1.
  uint64_t next_below(uint64_t n) {
    const uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  int next_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(next_below(static_cast<uint64_t>(hi - lo + 1)));
  }

  double next_normal() {
    // Marsaglia polar method; consumes a variable number of draws.
    for (;;) {
      double u = 2.0 * next_unit() - 1.0;
      double v = 2.0 * next_unit() - 1.0;
      double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        return u * std::sqrt(-2.0 * std::log(s) / s);
      }
    }
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
};

}  // namespace g2d
