#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace oamsim {

// Deterministic per-stream engine. The same (seed, stream ids) always yields
// the same sequence, independent of how many other streams were consumed in
// between, so parallel sweeps remain reproducible under a single seed.
inline std::mt19937_64 stream_rng(std::uint64_t seed,
                                  std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * stream.size());
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (std::uint64_t s : stream) {
    words.push_back(static_cast<std::uint32_t>(s));
    words.push_back(static_cast<std::uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

inline long long poisson_draw(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<long long> dist(mean);
  return dist(rng);
}

}  // namespace oamsim
