#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdim/fields.hpp"
#include "qdim/measure.hpp"

namespace qdim {

/// Image coordinates live on the lattice 2^-40 Z^d so that coincident images merge exactly.
inline constexpr int kImageLatticeBits = 40;

struct ImageMeasure {
  int dim = 1;
  std::vector<std::int64_t> lattice;  // size() * dim
  std::vector<double> masses;
  std::string measure_id;
  std::string field_id;

  std::size_t size() const noexcept { return masses.size(); }
  double coordinate(std::size_t i, int c) const;
  double total_mass() const;
};

/// Push-forward of an atomic measure through a sampled field. Each atom is snapped to the
/// nearest grid node; atoms more than half a cell away are rejected.
ImageMeasure image_measure(const FieldSample& field, const MeasureModel& atoms, std::string measure_id = {},
                           std::string field_id = {});

/// Image measure from explicit points, e.g. a synthetic map applied outside any sampler.
ImageMeasure image_from_points(int dim, std::span<const double> points, std::span<const double> masses);

/// Mesh-moment curve of the image with cubes of side m^-k anchored at `origin`
/// (default: coordinate-wise minimum of the image atoms).
MomentCurve image_moment_curve(const ImageMeasure& im, double q, int k_min, int k_max, int m = 2,
                               const std::optional<std::vector<double>>& origin = std::nullopt);

enum class EstimateKind { Lower, Upper, SingleFit };

std::string to_string(EstimateKind k);
EstimateKind parse_estimate_kind(const std::string& s);

struct DimensionEstimate {
  double q = 2.0;
  double slope = 0.0;
  double std_error = 0.0;
  int k_min = 0;
  int k_max = 0;
  EstimateKind kind = EstimateKind::SingleFit;
  double window_min = 0.0;  // extremes of the 4-point sliding-window slopes
  double window_max = 0.0;

  /// window_min for Lower, window_max for Upper, the full-range slope otherwise.
  double proxy() const noexcept;
};

/// Least-squares slope of log M against (q-1) log r over k in [k_min, k_max].
DimensionEstimate estimate_dq(const MomentCurve& curve, int k_min, int k_max,
                              EstimateKind kind = EstimateKind::SingleFit);

/// A known dimension wrapped as an estimate with zero error.
DimensionEstimate exact_estimate(double q, double value);

struct HolderCheck {
  double bound;
  double tolerance;
  double image;
  double margin;  // bound + tolerance - image
  bool holds;
};

HolderCheck holder_upper_check(const DimensionEstimate& image, const DimensionEstimate& source, double alpha, int d,
                               double tolerance = 0.05);

}  // namespace qdim
