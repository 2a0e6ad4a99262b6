#pragma once

#include <cstdint>
#include <random>

namespace qdim {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Child seed for stream `stream` of a run seeded with `seed`.
/// Used for replicates, coordinate processes and suite instances alike.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

const char* version() noexcept;

}  // namespace qdim
