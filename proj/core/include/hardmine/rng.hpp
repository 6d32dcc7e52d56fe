#pragma once

#include <cstdint>
#include <random>

namespace hardmine {

/// splitmix64 step; the standard finalizer gives good avalanche behaviour and
/// is reproducible everywhere, which is what the per-image stream seeds need.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for an independent stream derived from (run seed, stream key, salt).
/// Every image gets its own stream so that results do not depend on the order
/// in which images are processed or on how work is split across workers.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t key,
                                        std::uint64_t salt = 0) {
  std::uint64_t state = seed;
  std::uint64_t mixed = splitmix64(state);
  state = mixed ^ key;
  mixed = splitmix64(state);
  state = mixed ^ salt;
  return splitmix64(state);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t key,
                                   std::uint64_t salt = 0) {
  return std::mt19937_64(derive_stream_seed(seed, key, salt));
}

/// Uniform draw in [0, 1) built from the top 53 bits of the engine output.
/// Unlike std::uniform_real_distribution this maps engine state to values in a
/// fully specified way, so identical seeds give identical samples on every
/// platform and standard library.
inline double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Bernoulli(p) draw; exact at the endpoints (p=0 never, p=1 always).
inline bool bernoulli(std::mt19937_64& engine, double p) {
  return uniform01(engine) < p;
}

}  // namespace hardmine
