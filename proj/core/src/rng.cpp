#include "qdim/rng.hpp"

#ifndef QDIM_VERSION_STRING
#define QDIM_VERSION_STRING "unknown"
#endif

namespace qdim {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

const char* version() noexcept { return QDIM_VERSION_STRING; }

}  // namespace qdim
