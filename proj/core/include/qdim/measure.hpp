#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qdim {

/// One half-open m-adic cube of level k in [0,1)^N.
///
/// Each level contributes one symbol packing the N coordinate digits as
/// d_0 + m*d_1 + ... + m^(N-1)*d_(N-1). Symbol 0 of the word is the coarsest digit.
class CubeAddress {
 public:
  CubeAddress(int m, int dim, std::vector<std::uint32_t> symbols);

  /// Cube [i_0 m^-k, (i_0+1) m^-k) x ... from per-coordinate integer indices.
  static CubeAddress from_indices(int m, int level, std::span<const std::uint64_t> indices);

  int base() const noexcept { return m_; }
  int dim() const noexcept { return dim_; }
  int level() const noexcept { return static_cast<int>(symbols_.size()); }
  const std::vector<std::uint32_t>& symbols() const noexcept { return symbols_; }

  int digit(int k, int coord) const;
  std::vector<std::uint64_t> indices() const;

 private:
  int m_;
  int dim_;
  std::vector<std::uint32_t> symbols_;
};

struct Multinomial {
  int m = 2;
  int dim = 1;
  std::vector<double> weights;  // m^dim entries, indexed by packed symbol
};

struct Uniform {
  int m = 2;
  int dim = 1;
};

/// Finitely many weighted points with m-adic coordinates num / m^depth.
class Atoms {
 public:
  Atoms() = default;
  Atoms(int m, int dim, int depth, std::vector<std::uint64_t> numerators, std::vector<double> masses);

  /// Snap double coordinates in [0,1) to the m-adic lattice of the given depth
  /// (default: the finest depth that a double resolves).
  static Atoms from_points(int m, int dim, std::span<const double> points, std::vector<double> masses,
                           int depth = -1);
  static int default_depth(int m);

  int base() const noexcept { return m_; }
  int dim() const noexcept { return dim_; }
  int depth() const noexcept { return depth_; }
  std::uint64_t denominator() const noexcept { return denom_; }
  std::size_t size() const noexcept { return masses_.size(); }

  std::span<const std::uint64_t> numerators(std::size_t i) const {
    return {num_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  const std::vector<std::uint64_t>& all_numerators() const noexcept { return num_; }
  double mass(std::size_t i) const { return masses_[i]; }
  const std::vector<double>& masses() const noexcept { return masses_; }
  double coordinate(std::size_t i, int c) const;

 private:
  int m_ = 2;
  int dim_ = 1;
  int depth_ = 0;
  std::uint64_t denom_ = 1;
  std::vector<std::uint64_t> num_;
  std::vector<double> masses_;
};

using MeasureVariant = std::variant<Multinomial, Atoms, Uniform>;

class MeasureModel {
 public:
  explicit MeasureModel(MeasureVariant v);

  static MeasureModel multinomial(int m, std::vector<double> weights, int dim = 1);
  static MeasureModel uniform(int dim, int m = 2);
  static MeasureModel atoms(Atoms a);

  int dim() const noexcept { return dim_; }
  int base() const noexcept { return m_; }
  const MeasureVariant& variant() const noexcept { return v_; }
  bool is_atoms() const noexcept { return std::holds_alternative<Atoms>(v_); }
  const Atoms& as_atoms() const;
  std::string kind_name() const;

 private:
  MeasureVariant v_;
  int dim_;
  int m_;
};

enum class CurveKind { MeshMoment, Correlation };

struct CurvePoint {
  int k;
  double r;
  double value;
};

struct MomentCurve {
  double q = 2.0;
  int base = 2;
  CurveKind kind = CurveKind::MeshMoment;
  std::vector<CurvePoint> points;
};

double cylinder_mass(const MeasureModel& model, const CubeAddress& cube);

/// Sum over level-k cubes of mu(C)^q; never touches empty cubes.
double moment_sum(const MeasureModel& model, double q, int level);

/// Atomic evaluation of the integral of mu(B(x,r))^(q-1) d mu(x) with closed Euclidean balls.
double correlation_integral(const MeasureModel& model, double q, double r);

/// Atoms at the centres of the positive-mass level-K cubes. Atoms pass through unchanged.
MeasureModel discretize(const MeasureModel& model, int depth);

double analytic_dq(const MeasureModel& model, double q);

MomentCurve moment_curve(const MeasureModel& model, double q, int k_min, int k_max);
MomentCurve correlation_curve(const MeasureModel& model, double q, std::span<const double> radii);

/// Image of the measure under x -> x/2, so that the support lies in [0,1/2)^N.
MeasureModel halve_support(const MeasureModel& model);

}  // namespace qdim
