#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace tar4c {

/// splitmix64 step; used to spread seed material before feeding mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return splitmix64(seed ^ splitmix64(v));
}

inline std::uint64_t hash_combine(std::uint64_t seed, const std::string& s) {
  std::uint64_t h = seed;
  for (unsigned char c : s) h = splitmix64(h ^ c);
  return h;
}

/// Independent substream engine keyed by (master seed, stream id).
/// Work scheduled in parallel draws from per-item substreams, so results do
/// not depend on worker count or completion order.
inline std::mt19937_64 substream(std::uint64_t master_seed, std::uint64_t stream_id) {
  return std::mt19937_64(hash_combine(master_seed, stream_id));
}

}  // namespace tar4c
