#pragma once

#include <cstdint>
#include <cstring>
#include <random>

namespace wbsc {

// SplitMix64 step; used to derive independent seed streams from a master
// seed so that trials, emitters and solver stages never share RNG state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
  std::uint64_t h = splitmix64(s);
  s ^= b;
  return h ^ splitmix64(s);
}

inline std::uint64_t bits_of(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof(u));
  return u;
}

// trial_seed = hash(master_seed, axis_value, trial_index)
inline std::uint64_t trial_seed(std::uint64_t master, double axis_value,
                                std::uint64_t trial_index) {
  return mix_seed(mix_seed(master, bits_of(axis_value)), trial_index);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace wbsc
