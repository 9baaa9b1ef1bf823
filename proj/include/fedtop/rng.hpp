#pragma once

#include <cstdint>
#include <random>

namespace fedtop::rng {

// SplitMix64 finalizer. Seed derivation must be stable across build modes and
// across the simulator / networked paths, so it cannot depend on std::hash.
inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream tags keep unrelated consumers of one run seed apart.
enum Stream : std::uint64_t {
  kModelInit = 0x6d6f64656c,   // initial global parameters
  kClassMeans = 0x636c617373,  // shared mixture component means
  kClientData = 0x64617461,    // per-client shard generation
  kSampleSplit = 0x73706c74,   // per-client train/val/test partition
  kClientSplit = 0x726f6c65,   // training/testing role assignment
  kPoison = 0x706f6973,        // poisoning noise
  kLocalTrain = 0x747261696e,  // per-(round, client) local training
  kPersonalize = 0x70657273,   // per-client personalization
};

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a) {
  return mix(seed ^ mix(a));
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive(derive(seed, a), b);
}

inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                            std::uint64_t c) {
  return derive(derive(seed, a, b), c);
}

inline std::mt19937_64 engine(std::uint64_t seed) { return std::mt19937_64{seed}; }

}  // namespace fedtop::rng
