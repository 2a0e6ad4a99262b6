#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qdim {

/// Names the metric d_a for the translate a = (j_1, ..., j_N) / (m - 1), 0 <= j_l <= m/2 - 1.
struct UltrametricId {
  int m = 2;
  std::vector<int> j;

  int dim() const noexcept { return static_cast<int>(j.size()); }
  std::vector<double> translation() const;
  void validate() const;
  bool operator==(const UltrametricId&) const = default;
};

/// All (m/2)^N translates in lexicographic order, j_1 most significant.
std::vector<UltrametricId> translation_family(int m, int dim);

/// Exact coordinates X / D with D = (m - 1) m^K, K the largest depth with D <= 2^62.
class ExactLattice {
 public:
  explicit ExactLattice(int m);

  int base() const noexcept { return m_; }
  int depth() const noexcept { return K_; }
  std::uint64_t denominator() const noexcept { return D_; }
  std::uint64_t m_pow_depth() const noexcept { return mK_; }

 private:
  int m_;
  int K_;
  std::uint64_t D_;
  std::uint64_t mK_;
};

struct ExactPoint {
  std::vector<std::uint64_t> num;
  double snap_error = 0.0;  // max |X/D - x| over coordinates
};

/// Snap a point of [0,1/2)^N onto the lattice; rejects points outside the half cube.
ExactPoint snap_point(std::span<const double> x, const ExactLattice& lattice);

struct UltraDistance {
  double value;    // m^-level, or 0 for equal points
  int level;       // deepest level with a shared cube
  bool saturated;  // the points share cubes through the lattice depth
};

UltraDistance d_a(const ExactPoint& x, const ExactPoint& y, const UltrametricId& id, const ExactLattice& lattice);
UltraDistance d_a(std::span<const double> x, std::span<const double> y, const UltrametricId& id);

/// Cube index of x + a along every coordinate at level k <= depth.
std::vector<std::uint64_t> translated_cube(const ExactPoint& x, const UltrametricId& id, const ExactLattice& lattice,
                                           int level);

/// |x - y| <= sqrt(N) d_a(x, y), evaluated exactly on the lattice.
bool lower_bound_check(const ExactPoint& x, const ExactPoint& y, const UltrametricId& id, const ExactLattice& lattice);
bool lower_bound_check(std::span<const double> x, std::span<const double> y, const UltrametricId& id);

/// d_a(x, y) <= 8 m (m - 1) |x - y|, evaluated exactly on the lattice.
bool upper_bound_check(const ExactPoint& x, const ExactPoint& y, const UltrametricId& id, const ExactLattice& lattice);

/// Number of a in the family with d_a(x, y) > 8 m (m - 1) |x - y|.
int exception_count(std::span<const double> x, std::span<const double> y, int m);
int exception_count(const ExactPoint& x, const ExactPoint& y, int dim, const ExactLattice& lattice);

/// N (m/2)^(N-1).
long exception_bound(int m, int dim);

/// First translate (lexicographic) under which d_a is bi-Lipschitz to |.| on every pair of points.
UltrametricId select_translate(std::span<const std::vector<double>> points, int m);

}  // namespace qdim
