#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qdim/fields.hpp"

namespace qdim {

struct SmallBallOptions {
  std::vector<std::vector<double>> x;  // x_1..x_n in [0,1/2)^N
  std::vector<double> y;
  std::vector<double> radii;
  double s = 1.0;
  std::uint64_t replicates = 1'000'000;
  std::uint64_t seed = 0;
  std::uint64_t min_hits = 100;  // probabilities resting on fewer hits are flagged and left out of the fit
  double tolerance = 0.1;
};

struct SmallBallPoint {
  double r;
  double probability;
  std::uint64_t hits;
  double std_error;
  bool flagged;
  double bound_term;                // r^(s n) * sum_a phi_a^(alpha s)
  double ratio;                     // probability / bound_term
  std::optional<double> closed_form;  // n = 1, d = 1 only
};

struct SmallBallReport {
  int n = 0;
  int m = 0;  // ultrametric base 2 n^2 N + 2
  double s = 0.0;
  double phi_sum = 0.0;
  std::vector<SmallBallPoint> points;
  double slope = 0.0;  // least-squares slope of log P against log r over unflagged radii
  double slope_std_error = 0.0;
  int fitted_points = 0;
  double target = 0.0;  // s n
  double fitted_constant = 0.0;  // max ratio over unflagged radii
  bool slope_within = false;     // |slope - target| <= tolerance
  bool slope_above = false;      // slope >= target - 2 tolerance
};

/// Monte Carlo estimate of P{|X(y) - X(x_i)| <= r for all i} for an fBm.
SmallBallReport verify_smallball(const FieldSpec& spec, const SmallBallOptions& options);

}  // namespace qdim
