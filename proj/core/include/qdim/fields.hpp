#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qdim {

// ------------------------------------------------------------------ psi models

struct PowerLaw {
  double alpha;
};

/// psi induced by an infinity-scale field with per-annulus exponents hurst[j].
/// Indices are read off hurst[tail_start..].
struct DyadicPiecewise {
  std::vector<double> hurst;
  std::size_t tail_start = 0;
};

/// Piecewise-linear log psi against log r.
struct Tabulated {
  std::vector<std::pair<double, double>> log_log;
};

using PsiVariant = std::variant<PowerLaw, DyadicPiecewise, Tabulated>;

class PsiModel {
 public:
  explicit PsiModel(PsiVariant v);
  double operator()(double r) const;
  const PsiVariant& variant() const noexcept { return v_; }

 private:
  PsiVariant v_;
};

/// max psi(2r)/psi(r) over a log grid in [r_min, r_max].
double doubling_constant(const PsiModel& psi, double r_min, double r_max, int points = 64);

struct PsiIndices {
  double lower;  // alpha_*
  double upper;  // alpha^*
};

PsiIndices psi_indices(const PsiModel& psi);

enum class LacunarityStatus { HoldsForTail, FailsAtK, Vacuous };

struct LacunarityResult {
  LacunarityStatus status;
  int witness_k = -1;                // k with T_(2k+2) <= ratio * T_(2k+1)
  double ratio = 0.0;
  std::vector<std::size_t> times;    // T_1, T_2, ... (indices into H)
};

/// Checks T_(2k+2) > ratio * T_(2k+1) for every k >= burn_in whose T_(2k+2) exists.
/// limsup and liminf are taken as max and min over H[tail_start..].
LacunarityResult check_lacunarity(std::span<const double> hurst, double eps, int burn_in = 0,
                                  std::size_t tail_start = 0);

std::string to_string(LacunarityStatus s);

// ----------------------------------------------------------------- field specs

struct Fbm {
  double alpha;
};

/// Spectral density c |lambda|^(-2 gamma) (1 + |lambda|^2)^(-beta), c chosen so that the variogram is 1 at |h| = 1.
struct RieszBessel {
  double gamma;
  double beta;
};

/// Harmonizable sum over annuli D_0 = {|l| < 1}, D_j = {2^(j-1) <= |l| < 2^j}, truncated after j_max.
struct InfinityScale {
  std::vector<double> hurst;
  int j_max = 0;
  std::size_t tail_start = 0;
};

using FieldVariant = std::variant<Fbm, RieszBessel, InfinityScale>;

class FieldSpec {
 public:
  FieldSpec(FieldVariant v, int domain_dim = 1, int range_dim = 1);

  static FieldSpec fbm(double alpha, int domain_dim = 1, int range_dim = 1);
  static FieldSpec riesz_bessel(double gamma, double beta, int domain_dim = 1, int range_dim = 1);
  static FieldSpec infinity_scale(std::vector<double> hurst, int j_max, std::size_t tail_start = 0, int range_dim = 1);

  const FieldVariant& variant() const noexcept { return v_; }
  int domain_dim() const noexcept { return n_; }
  int range_dim() const noexcept { return d_; }
  std::string kind_name() const;

  /// E[(X0(x+h) - X0(x))^2] for |h| = h.
  double variogram(double h) const;
  double covariance(std::span<const double> x, std::span<const double> y) const;
  double variance(std::span<const double> x) const;

  /// gamma + beta - N/2 for Riesz-Bessel specs.
  double riesz_bessel_index() const;
  /// psi model whose indices govern the field; unsupported for smooth Riesz-Bessel specs.
  PsiModel psi() const;
  /// Spectral density (normalised) at radius |lambda|; Riesz-Bessel and infinity-scale only.
  double spectral_density(double radius) const;

 private:
  FieldVariant v_;
  int n_;
  int d_;
  double norm_ = 1.0;
};

double fbm_covariance(std::span<const double> x, std::span<const double> y, double alpha);
double fbm_covariance(double x, double y, double alpha);

// ---------------------------------------------------------------------- grids

struct Grid {
  int dim = 1;
  std::vector<double> points;  // flattened, size() * dim

  // Set for grids built by uniform(): (cells + 1)^dim points, coordinate 0 fastest.
  bool is_uniform = false;
  std::size_t cells = 0;
  double lo = 0.0;
  double spacing = 0.0;

  static Grid uniform(int dim, std::size_t cells, double lo, double hi);
  static Grid from_points(int dim, std::vector<double> points);

  std::size_t size() const noexcept { return points.size() / static_cast<std::size_t>(dim); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  std::size_t per_axis() const noexcept { return cells + 1; }
};

enum class SamplingMethod { ExactCholesky, Circulant1d, Spectral };

std::string to_string(SamplingMethod m);
SamplingMethod parse_sampling_method(const std::string& s);

struct SpectralOptions {
  double lambda_min = 1.0 / 4096.0;
  double lambda_max = 4096.0;
  int radial = 4096;          // log-spaced radii
  int angular = 8;            // half-circle directions when N = 2
  int bins_per_annulus = 64;  // infinity-scale
};

struct FieldSample {
  Grid grid;
  FieldSpec spec;
  std::uint64_t seed = 0;
  SamplingMethod method = SamplingMethod::ExactCholesky;
  double jitter = 0.0;
  std::vector<double> values;  // size() * range_dim, point-major

  int range_dim() const noexcept { return spec.range_dim(); }
  double value(std::size_t i, int c) const {
    return values[i * static_cast<std::size_t>(spec.range_dim()) + static_cast<std::size_t>(c)];
  }
};

FieldSample sample_field(const FieldSpec& spec, const Grid& grid, std::uint64_t seed, SamplingMethod method,
                         const SpectralOptions& options = {});

/// Increment variogram the spectral sampler reproduces (along the first axis), for measuring truncation error.
double spectral_variogram(const FieldSpec& spec, double h, const SpectralOptions& options = {});

// ---------------------------------------------------------------- diagnostics

struct VariogramPoint {
  double lag;
  double value;
  double std_error;
  std::size_t pairs;
};

/// Pooled squared increments of coordinate 0 along the first axis; the standard error
/// is taken across per-sample means.
std::vector<VariogramPoint> variogram(std::span<const FieldSample> samples, std::span<const double> lags);

struct ConditionalVariance {
  double variance;
  double jitter;
};

ConditionalVariance conditional_variance(const FieldSpec& spec, std::span<const double> x,
                                         std::span<const std::vector<double>> conditioners);

struct SlnOptions {
  double T = 1.0;         // scan x in (0, T]
  double r0 = 0.5;        // conditioners y with r <= |x - y| <= r0
  double spacing = 1.0 / 1024.0;
  int x_stride = 8;       // x on every x_stride-th grid node
};

struct SlnRatio {
  double r;
  double min_ratio;
  double argmin_x;
};

/// For each r: min over x of Var(X0(x) | X0(y), y on the grid, r <= |x-y| <= r0) / psi(r).
std::vector<SlnRatio> sln_ratio_scan(const FieldSpec& spec, const SlnOptions& options, std::span<const double> radii);

struct ModulusPoint {
  double delta;
  double omega;
};

std::vector<ModulusPoint> modulus_of_continuity(const FieldSample& sample, std::span<const double> deltas,
                                                int coord = 0);

}  // namespace qdim
