#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qdim/measure.hpp"
#include "qdim/ultrametric.hpp"

namespace qdim {

/// A vertex of the M-ary tree: symbols are 0-based, symbol i selects child i.
struct Word {
  int M = 2;
  std::vector<std::uint16_t> symbols;

  int length() const noexcept { return static_cast<int>(symbols.size()); }
  Word prefix(int k) const;
  bool is_prefix_of(const Word& other) const noexcept;
  /// Position of the vertex among the M^length vertices of its level, first symbol most significant.
  std::uint64_t index() const;
  static Word from_index(int M, int length, std::uint64_t index);
  std::string to_string() const;

  auto operator<=>(const Word&) const = default;
};

struct JoinVertex {
  Word vertex;
  int multiplicity;
};

struct JoinSet {
  std::vector<JoinVertex> vertices;  // sorted by (level, word)

  int total() const noexcept;
  std::vector<int> levels() const;  // sorted, with multiplicity
};

/// Join set of n >= 2 equal-length words. Equal words have no join above the word depth and are
/// rejected unless allow_equal is set, in which case they join at the word itself (level K).
JoinSet join_set(std::span<const Word> words, bool allow_equal = false);

/// The join vertex of least length, i.e. the longest common prefix.
Word top_vertex(const JoinSet& js);

/// f(l_1) ... f(l_n) over the join levels of n + 1 words.
double multipotential_phi(std::span<const Word> words, const std::function<double(int)>& f, bool allow_equal = false);

/// Words of the translated cube hierarchy: symbol k packs the level-(k+1) digits of x + a.
Word ultrametric_word(const ExactPoint& x, const UltrametricId& id, const ExactLattice& lattice, int depth);

/// m^(k(C_1)) ... m^(k(C_n)) over the join cubes of n + 1 points under d_a.
double phi_a(std::span<const std::vector<double>> points, const UltrametricId& id);

/// Canonical labelled join tree of an ordered tuple. Two tuples share a signature exactly when
/// a root-fixing automorphism maps one onto the other.
struct OrbitSignature {
  std::string canonical;
  int top_level = -1;  // level of the root join; -1 for a single leaf
  int leaf_count = 1;
  std::vector<int> levels;  // sorted, n - 1 entries
  bool saturated = false;   // some words coincide at the depth limit

  bool operator==(const OrbitSignature& o) const noexcept { return canonical == o.canonical; }
  auto operator<=>(const OrbitSignature& o) const noexcept { return canonical <=> o.canonical; }
};

OrbitSignature orbit_signature(std::span<const Word> tuple, bool allow_equal = false);

struct OrbitClass {
  OrbitSignature signature;
  std::uint64_t tuples;
};

struct OrbitEnumeration {
  std::vector<OrbitClass> orbits;  // sorted by signature
  std::uint64_t saturated_tuples = 0;
};

inline constexpr std::uint64_t kTupleGuard = 10'000'000;

/// All orbits of ordered n-tuples of depth-K leaves in the M-ary tree. Tuples with coinciding
/// words are counted in saturated_tuples and, if include_saturated, also get their own classes.
OrbitEnumeration enumerate_orbits(int M, int K, int n, bool include_saturated = false);

/// Cylinder masses of a measure on the M-ary tree down to depth K.
class TreeMeasure {
 public:
  static TreeMeasure from_leaf_masses(int M, int K, std::vector<double> leaves);
  /// Leaf masses are the level-K cube masses; M = m^N.
  static TreeMeasure from_model(const MeasureModel& model, int K);

  int branching() const noexcept { return M_; }
  int depth() const noexcept { return K_; }
  double mass(const Word& v) const;
  const std::vector<double>& level(int l) const { return levels_.at(static_cast<std::size_t>(l)); }
  /// Sum of mu(C_u)^q over |u| = l with u below v.
  double level_moment(int l, double q, const Word& v) const;

 private:
  int M_ = 2;
  int K_ = 0;
  std::vector<std::vector<double>> levels_;
};

struct InequalityCheck {
  double lhs;
  double rhs;
  bool holds;  // lhs <= rhs (1 + 1e-9)
  double margin() const noexcept { return rhs - lhs; }
};

/// Every n-tuple of depth-K leaves with its orbit and top vertex, for repeated checks on one tree shape.
class OrbitTable {
 public:
  OrbitTable(int M, int K, int n, bool include_saturated = true);

  int branching() const noexcept { return M_; }
  int depth() const noexcept { return K_; }
  int tuple_size() const noexcept { return n_; }
  const std::vector<OrbitSignature>& orbits() const noexcept { return orbits_; }
  std::size_t orbit_index(const OrbitSignature& s) const;

  /// mu^n of tuples in each orbit whose top vertex lies below v, for every vertex v with |v| <= K.
  /// Indexed [orbit][vertex offset] with vertex offset = (M^l - 1)/(M - 1) + index at level l.
  std::vector<std::vector<double>> orbit_masses(const TreeMeasure& tm) const;
  static std::size_t vertex_offset(int M, int level, std::uint64_t index);

 private:
  int M_, K_, n_;
  std::vector<OrbitSignature> orbits_;
  std::vector<std::uint32_t> tuple_orbit_;
  std::vector<std::uint8_t> tuple_top_level_;
  bool include_saturated_;
};

/// Right-hand sides of the two inequalities for a given level multiset.
double integer_rhs(const TreeMeasure& tm, const Word& v, std::span<const int> levels, double q, int n);
double frac_rhs(const TreeMeasure& tm, std::span<const int> levels, double q, int n);

InequalityCheck verify_integer_inequality(const TreeMeasure& tm, const Word& v, const OrbitSignature& orbit, double q,
                                          int n);

/// levels l_1 < ... < l_p with orbits O_r of m_r-tuples; the m_r are the orbits' leaf counts.
InequalityCheck verify_frac_inequality(const TreeMeasure& tm, std::span<const int> levels,
                                       std::span<const OrbitSignature> orbits, double q, int n);

/// Labelled join trees on m leaves whose join levels are exactly the given multiset.
std::vector<OrbitSignature> abstract_orbits(int m, std::span<const int> levels, int max_branching = 0);

/// N(k_1, ..., k_n): choices (p, l_1 < ... < l_p, O_1, ..., O_p) with O_r of top level >= l_r whose
/// aggregate levels are the multiset k. Branching is unbounded unless max_branching > 0.
std::uint64_t count_level_configs(std::span<const int> levels, int max_branching = 0);

/// 2^n n! sum_k (k+1)^(n-1) lambda^(k/n).
double level_series_bound(int n, double lambda);
/// sum over k_1 <= ... <= k_n <= L of N(k) lambda^((k_1 + ... + k_n)/n).
double level_series_partial(int n, double lambda, int L);

struct PartialJ {
  double value;
  std::vector<double> log_condition;  // log(f(l)^(q-1) sum_|u|=l mu(C_u)^q) / l for l = 1..K
};

/// Depth-K truncation of the integral of [integral of phi(i_1..i_n, j) d mu^n]^((q-1)/n) d mu(j),
/// with coinciding leaves joined at level K.
PartialJ partial_J(const TreeMeasure& tm, const std::function<double(int)>& f, double q, int n);

}  // namespace qdim
