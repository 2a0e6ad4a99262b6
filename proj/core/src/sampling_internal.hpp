#pragma once

#include <vector>

#include "qdim/fields.hpp"

namespace qdim::detail {

// Standard normals for coordinate stream `coord` of a sample seeded with `seed`.
std::vector<double> normals(std::uint64_t seed, int coord, std::size_t count);

void sample_spectral(const FieldSpec& spec, const Grid& grid, std::uint64_t seed, const SpectralOptions& options,
                     std::vector<double>& values);


}  // namespace qdim::detail
