#include "qdim/ultrametric.hpp"

#include <cmath>
#include <string>

#include "detail.hpp"
#include "qdim/error.hpp"

namespace qdim {

using detail::require;
using detail::u128;

std::vector<double> UltrametricId::translation() const {
  std::vector<double> a;
  for (int v : j) a.push_back(static_cast<double>(v) / (m - 1));
  return a;
}

void UltrametricId::validate() const {
  detail::require_even_base(m);
  require(!j.empty(), "translate needs at least one coordinate");
  for (int v : j) require(v >= 0 && v <= m / 2 - 1, "translate numerator out of range [0, m/2 - 1]");
}

std::vector<UltrametricId> translation_family(int m, int dim) {
  detail::require_even_base(m);
  require(dim >= 1, "dimension must be >= 1");
  const int h = m / 2;
  std::vector<UltrametricId> out;
  std::vector<int> j(static_cast<std::size_t>(dim), 0);
  while (true) {
    out.push_back({m, j});
    int c = dim - 1;
    while (c >= 0 && ++j[static_cast<std::size_t>(c)] == h) j[static_cast<std::size_t>(c--)] = 0;
    if (c < 0) break;
  }
  return out;
}

ExactLattice::ExactLattice(int m) : m_(m), K_(0), D_(0), mK_(1) {
  detail::require_even_base(m);
  const std::uint64_t limit = std::uint64_t{1} << 62;
  while (true) {
    std::uint64_t next = 0;
    if (!detail::pow_fits(m, K_ + 1, limit / (m - 1), &next)) break;
    ++K_;
    mK_ = next;
  }
  D_ = static_cast<std::uint64_t>(m - 1) * mK_;
}

ExactPoint snap_point(std::span<const double> x, const ExactLattice& lattice) {
  ExactPoint p;
  const auto D = static_cast<long double>(lattice.denominator());
  for (double v : x) {
    require(std::isfinite(v) && v >= 0.0 && v < 0.5, "point coordinate outside [0, 1/2): " + std::to_string(v));
    auto X = static_cast<std::uint64_t>(std::llround(static_cast<long double>(v) * D));
    if (2 * X >= lattice.denominator()) X = (lattice.denominator() - 1) / 2;
    p.snap_error = std::max(p.snap_error, static_cast<double>(std::abs(static_cast<long double>(X) / D - v)));
    p.num.push_back(X);
  }
  return p;
}

namespace {

void check_pair(const ExactPoint& x, const ExactPoint& y, const UltrametricId& id, const ExactLattice& lattice) {
  require(x.num.size() == y.num.size() && x.num.size() == id.j.size(), "point/translate dimension mismatch");
  require(id.m == lattice.base(), "translate base does not match the lattice");
}

u128 squared_gap(const ExactPoint& x, const ExactPoint& y) {
  u128 s = 0;
  for (std::size_t c = 0; c < x.num.size(); ++c) {
    const std::uint64_t d = x.num[c] > y.num[c] ? x.num[c] - y.num[c] : y.num[c] - x.num[c];
    s += static_cast<u128>(d) * d;
  }
  return s;
}

u128 pow128(std::uint64_t b, int e) {
  u128 r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

std::vector<std::uint64_t> translated_cube(const ExactPoint& x, const UltrametricId& id, const ExactLattice& lattice,
                                           int level) {
  require(level >= 0 && level <= lattice.depth(), "level beyond the lattice depth");
  const std::uint64_t width = static_cast<std::uint64_t>(id.m - 1) * detail::ipow(id.m, lattice.depth() - level);
  std::vector<std::uint64_t> out;
  for (std::size_t c = 0; c < x.num.size(); ++c)
    out.push_back((x.num[c] + static_cast<std::uint64_t>(id.j[c]) * lattice.m_pow_depth()) / width);
  return out;
}

UltraDistance d_a(const ExactPoint& x, const ExactPoint& y, const UltrametricId& id, const ExactLattice& lattice) {
  check_pair(x, y, id, lattice);
  if (x.num == y.num) return {0.0, lattice.depth(), false};
  const int K = lattice.depth();
  const auto shift = lattice.m_pow_depth();
  int level = K;
  for (std::size_t c = 0; c < x.num.size(); ++c) {
    const std::uint64_t u = x.num[c] + static_cast<std::uint64_t>(id.j[c]) * shift;
    const std::uint64_t v = y.num[c] + static_cast<std::uint64_t>(id.j[c]) * shift;
    // width at level k is (m-1) m^(K-k); agreement is monotone in k.
    std::uint64_t width = static_cast<std::uint64_t>(id.m - 1) * shift;  // level 0
    int k = 0;
    while (k < level && u / (width / id.m) == v / (width / id.m)) {
      width /= id.m;
      ++k;
    }
    level = std::min(level, k);
  }
  return {std::pow(static_cast<double>(id.m), -level), level, level == K};
}

UltraDistance d_a(std::span<const double> x, std::span<const double> y, const UltrametricId& id) {
  id.validate();
  const ExactLattice lattice(id.m);
  return d_a(snap_point(x, lattice), snap_point(y, lattice), id, lattice);
}

bool lower_bound_check(const ExactPoint& x, const ExactPoint& y, const UltrametricId& id, const ExactLattice& lattice) {
  const UltraDistance d = d_a(x, y, id, lattice);
  const u128 gap = squared_gap(x, y);
  if (d.value == 0.0) return gap == 0;
  // sum dX^2 / D^2 <= N m^-2k  <=>  sum dX^2 <= N ((m-1) m^(K-k))^2
  const u128 w = static_cast<u128>(id.m - 1) * pow128(id.m, lattice.depth() - d.level);
  return gap <= static_cast<u128>(x.num.size()) * w * w;
}

bool lower_bound_check(std::span<const double> x, std::span<const double> y, const UltrametricId& id) {
  id.validate();
  const ExactLattice lattice(id.m);
  return lower_bound_check(snap_point(x, lattice), snap_point(y, lattice), id, lattice);
}

bool upper_bound_check(const ExactPoint& x, const ExactPoint& y, const UltrametricId& id, const ExactLattice& lattice) {
  const UltraDistance d = d_a(x, y, id, lattice);
  if (d.value == 0.0) return true;
  // m^-k <= 8 m (m-1) sqrt(S) / D  <=>  m^(2(K-k)) <= 64 m^2 S; compare via S >= ceil(P / Q).
  const u128 P = pow128(id.m, 2 * (lattice.depth() - d.level));
  const u128 Q = static_cast<u128>(64) * id.m * id.m;
  const u128 S = squared_gap(x, y);
  return S >= (P + Q - 1) / Q;
}

int exception_count(const ExactPoint& x, const ExactPoint& y, int dim, const ExactLattice& lattice) {
  require(x.num != y.num, "exception_count needs distinct points");
  int count = 0;
  for (const auto& id : translation_family(lattice.base(), dim))
    if (!upper_bound_check(x, y, id, lattice)) ++count;
  return count;
}

int exception_count(std::span<const double> x, std::span<const double> y, int m) {
  const ExactLattice lattice(m);
  require(x.size() == y.size() && !x.empty(), "point dimension mismatch");
  return exception_count(snap_point(x, lattice), snap_point(y, lattice), static_cast<int>(x.size()), lattice);
}

long exception_bound(int m, int dim) {
  long b = dim;
  for (int i = 0; i < dim - 1; ++i) b *= m / 2;
  return b;
}

UltrametricId select_translate(std::span<const std::vector<double>> points, int m) {
  detail::require_even_base(m);
  require(!points.empty(), "select_translate needs at least one point");
  const auto n = static_cast<long>(points.size());
  const auto N = static_cast<int>(points.front().size());
  require(N >= 1, "points need at least one coordinate");
  require(m > 2 * n * n * N, "select_translate needs m > 2 n^2 N (m = " + std::to_string(m) + ")");
  const ExactLattice lattice(m);
  std::vector<ExactPoint> pts;
  for (const auto& p : points) {
    require(static_cast<int>(p.size()) == N, "points must share one dimension");
    pts.push_back(snap_point(p, lattice));
  }
  for (const auto& id : translation_family(m, N)) {
    bool good = true;
    for (std::size_t a = 0; a < pts.size() && good; ++a)
      for (std::size_t b = a + 1; b < pts.size() && good; ++b)
        good = lower_bound_check(pts[a], pts[b], id, lattice) && upper_bound_check(pts[a], pts[b], id, lattice);
    if (good) return id;
  }
  throw InternalContradiction("no translate in the family is bi-Lipschitz on the given points (m = " +
                              std::to_string(m) + ")");
}

}  // namespace qdim
