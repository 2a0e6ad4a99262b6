#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "qdim/error.hpp"

namespace qdim::detail {

__extension__ using u128 = unsigned __int128;
__extension__ using i128 = __int128;

inline bool pow_fits(std::uint64_t base, int exp, std::uint64_t limit, std::uint64_t* out = nullptr) {
  std::uint64_t acc = 1;
  for (int i = 0; i < exp; ++i) {
    if (acc > limit / base) return false;
    acc *= base;
  }
  if (out) *out = acc;
  return true;
}

inline std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 0;
  if (exp < 0 || !pow_fits(base, exp, std::numeric_limits<std::uint64_t>::max(), &r))
    throw InvalidArgument(std::to_string(base) + "^" + std::to_string(exp) + " overflows 64 bits");
  return r;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

inline void require_even_base(int m) {
  require(m >= 2 && m % 2 == 0, "base m must be an even integer >= 2, got " + std::to_string(m));
}

}  // namespace qdim::detail
