// Seed derivation for reproducible sweeps. Every randomized stage of a sweep
// cell draws from its own engine, seeded by a splitmix64 chain over
// (master, snr index, seed index, block index, stage), so parallel execution
// order cannot reorder randomness.
#pragma once

#include <cstdint>
#include <random>

namespace deeprx {

enum class RngStage : std::uint64_t {
  PilotSymbols = 1,
  InfoSymbols = 2,
  ChannelNoise = 3,
  Augment = 4,
  TrainInit = 5,
  TrainBatches = 6,
};

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
  return splitmix64_next(s);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t snr_index,
                                 std::uint64_t seed_index, std::uint64_t block_index,
                                 RngStage stage) {
  std::uint64_t s = master;
  s = mix_seed(s, snr_index);
  s = mix_seed(s, seed_index);
  s = mix_seed(s, block_index);
  s = mix_seed(s, static_cast<std::uint64_t>(stage));
  return s;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace deeprx
