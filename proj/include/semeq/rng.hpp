#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace semeq {

// Seed/stream discipline: every random quantity in the library is drawn from
// an RngStream derived by hashing a root seed with integer tags. Substreams
// are independent of evaluation order and thread scheduling, so parallel
// sweeps never share or reorder noise.

inline uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t hash_tag(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t mix_seed(uint64_t seed, std::initializer_list<uint64_t> tags) {
  uint64_t s = seed;
  (void)splitmix64_next(s);
  for (uint64_t t : tags) {
    s ^= t + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    (void)splitmix64_next(s);
  }
  return s;
}

class RngStream {
 public:
  explicit RngStream(uint64_t seed) : state_(seed) {
    // burn-in so small seeds decorrelate
    (void)next_u64();
    (void)next_u64();
  }

  uint64_t next_u64() { return splitmix64_next(state_); }

  // uniform in [0, 1)
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]
  double next_unit_open0() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // standard normal, Box-Muller (cos branch; no cached spare so each call is
  // a pure function of the stream position)
  double next_gaussian() {
    const double u1 = next_unit_open0();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // uniform integer in [0, bound)
  int next_int(int bound) {
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(bound)) >> 64);
  }

  RngStream fork(uint64_t tag) const { return RngStream(mix_seed(state_, {tag})); }

 private:
  uint64_t state_;
};

}  // namespace semeq
