#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "qdim/error.hpp"
#include "qdim/estimator.hpp"
#include "qdim/measure.hpp"
#include "qdim/rng.hpp"

using namespace qdim;

namespace {

// Curve with log M = -(q-1) D k log m + c and optional deterministic wiggle.
MomentCurve synthetic_curve(double q, double D, int k_max, double wiggle = 0.0) {
  MomentCurve c;
  c.q = q;
  for (int k = 0; k <= k_max; ++k) {
    const double r = std::ldexp(1.0, -k);
    c.points.push_back({k, r, 0.3 * std::exp((q - 1) * D * std::log(r) + wiggle * ((k % 3) - 1))});
  }
  return c;
}

// Oracle for image mesh moments: bucket by floor((y - origin) * m^k) with long double arithmetic.
double bucket_moment(const std::vector<double>& pts, const std::vector<double>& w, double origin, double q, int k) {
  std::map<long long, double> cells;
  for (std::size_t i = 0; i < pts.size(); ++i)
    cells[static_cast<long long>(std::floor((static_cast<long double>(pts[i]) - origin) * std::ldexp(1.0L, k)))] += w[i];
  double s = 0;
  for (const auto& [key, v] : cells) s += std::pow(v, q);
  return s;
}

}  // namespace

TEST(EstimateDq, ExactLineRecoversSlope) {
  for (double D : {0.25, 0.785875, 1.0, 1.9}) {
    const auto e = estimate_dq(synthetic_curve(2.5, D, 12), 2, 10);
    EXPECT_NEAR(e.slope, D, 1e-12);
    EXPECT_NEAR(e.std_error, 0.0, 1e-10);
    EXPECT_NEAR(e.window_min, D, 1e-12);
    EXPECT_NEAR(e.window_max, D, 1e-12);
  }
}

TEST(EstimateDq, ProxySelectsWindow) {
  const auto curve = synthetic_curve(2.0, 0.8, 14, 0.05);
  const auto lo = estimate_dq(curve, 1, 13, EstimateKind::Lower);
  const auto hi = estimate_dq(curve, 1, 13, EstimateKind::Upper);
  const auto single = estimate_dq(curve, 1, 13);
  EXPECT_LT(lo.window_min, lo.window_max);
  EXPECT_EQ(lo.proxy(), lo.window_min);
  EXPECT_EQ(hi.proxy(), hi.window_max);
  EXPECT_EQ(single.proxy(), single.slope);
  EXPECT_GT(single.std_error, 0.0);
}

TEST(EstimateDq, UniformMeasureSlopeIsOne) {
  const auto curve = moment_curve(MeasureModel::uniform(1), 2.0, 0, 12);
  EXPECT_NEAR(estimate_dq(curve, 2, 10).slope, 1.0, 1e-12);
}

TEST(EstimateDq, RejectsShortRangeAndEmptyScales) {
  EXPECT_THROW(estimate_dq(synthetic_curve(2.0, 1.0, 10), 2, 4), InvalidArgument);
  auto c = synthetic_curve(2.0, 1.0, 10);
  c.points[5].value = 0.0;
  EXPECT_THROW(estimate_dq(c, 2, 8), InvalidArgument);
}

TEST(ImageMeasure, MergesCoincidentPoints) {
  const std::vector<double> pts{0.25, 0.5, 0.25, 0.75};
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  const auto im = image_from_points(1, pts, w);
  ASSERT_EQ(im.size(), 3u);
  EXPECT_DOUBLE_EQ(im.coordinate(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(im.masses[0], 0.4);
  EXPECT_NEAR(im.total_mass(), 1.0, 1e-15);
}

TEST(ImageMeasure, ImageMomentsMatchBucketOracle) {
  Rng rng(derive_seed(20, 0));
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> pts(200), w(200);
    double total = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      // Snap to the image lattice so the oracle sees the same coordinates.
      pts[i] = std::ldexp(std::round(std::ldexp(g(rng), 40)), -40);
      total += (w[i] = u(rng));
    }
    for (auto& v : w) v /= total;
    const auto im = image_from_points(1, pts, w);
    const double origin = *std::min_element(pts.begin(), pts.end());
    const auto curve = image_moment_curve(im, 2.0, 0, 12);
    for (const auto& p : curve.points)
      EXPECT_NEAR(p.value, bucket_moment(pts, w, origin, 2.0, p.k), 1e-12) << "k " << p.k;
  }
}

TEST(ImageMeasure, IdentityMapReproducesSourceMoments) {
  // The identity "field" x -> x applied to the uniform atoms gives the source moment curve.
  const auto atoms = discretize(MeasureModel::multinomial(2, {0.7, 0.3}), 10).as_atoms();
  std::vector<double> pts, w;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    pts.push_back(atoms.coordinate(i, 0));
    w.push_back(atoms.mass(i));
  }
  const auto im = image_from_points(1, pts, w);
  const std::vector<double> origin{0.0};
  const auto curve = image_moment_curve(im, 2.0, 0, 10, 2, origin);
  for (const auto& p : curve.points)
    EXPECT_NEAR(p.value, moment_sum(MeasureModel::multinomial(2, {0.7, 0.3}), 2.0, p.k), 1e-12);
}

TEST(ImageMeasure, FieldSnappingRules) {
  const auto grid = Grid::uniform(1, 4, 0.0, 1.0);
  FieldSample s{grid, FieldSpec::fbm(0.5), 0, SamplingMethod::ExactCholesky, 0.0, {0.0, 1.0, 2.0, 3.0, 4.0}};
  const auto ok = MeasureModel::atoms(Atoms::from_points(2, 1, std::vector<double>{0.25, 0.5}, {0.5, 0.5}));
  const auto im = image_measure(s, ok);
  ASSERT_EQ(im.size(), 2u);
  EXPECT_DOUBLE_EQ(im.coordinate(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(im.coordinate(1, 0), 2.0);
  const auto half = MeasureModel::atoms(Atoms::from_points(2, 1, std::vector<double>{0.125}, {1.0}));
  EXPECT_NO_THROW(image_measure(s, half));
  EXPECT_THROW(image_measure(s, MeasureModel::uniform(1)), InvalidArgument);
}

TEST(HolderCheck, Examples) {
  const auto src = exact_estimate(2.0, 0.5);
  const auto img = exact_estimate(2.0, 0.98);
  const auto h = holder_upper_check(img, src, 0.5, 1);
  EXPECT_DOUBLE_EQ(h.bound, 1.0);
  EXPECT_NEAR(h.margin, 0.07, 1e-15);
  EXPECT_TRUE(h.holds);
  EXPECT_FALSE(holder_upper_check(exact_estimate(2.0, 1.1), src, 0.5, 1).holds);
  EXPECT_DOUBLE_EQ(holder_upper_check(img, src, 0.2, 2).bound, 2.0);
  EXPECT_THROW(holder_upper_check(exact_estimate(3.0, 1.0), src, 0.5, 1), InvalidArgument);
}

TEST(EstimateKind, RoundTrip) {
  for (auto k : {EstimateKind::Lower, EstimateKind::Upper, EstimateKind::SingleFit})
    EXPECT_EQ(parse_estimate_kind(to_string(k)), k);
  EXPECT_THROW(parse_estimate_kind("median"), InvalidArgument);
}
