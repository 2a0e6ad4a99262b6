#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "qdim/error.hpp"
#include "qdim/fields.hpp"
#include "qdim/rng.hpp"

using namespace qdim;

namespace {

// Sample covariance of values at grid nodes across replicates.
Eigen::MatrixXd sample_covariance(const std::vector<FieldSample>& samples, const std::vector<std::size_t>& nodes) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : samples) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = s.value(nodes[static_cast<std::size_t>(i)], 0);
    acc += v * v.transpose();
  }
  return acc / static_cast<double>(samples.size());
}

}  // namespace

TEST(FbmCovariance, Examples) {
  EXPECT_DOUBLE_EQ(fbm_covariance(0.5, 0.5, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(fbm_covariance(0.25, 1.0, 0.5), 0.25);
  EXPECT_NEAR(fbm_covariance(1.0, 1.0, 0.3), 1.0, 1e-15);
  EXPECT_NEAR(fbm_covariance(1.0, 0.5, 0.3), 0.5 * (1.0 + std::pow(0.5, 0.6) - std::pow(0.5, 0.6)), 1e-15);
  EXPECT_THROW(fbm_covariance(0.1, 0.2, 1.0), InvalidArgument);
}

TEST(FbmCovariance, BrownianIsMinimum) {
  Rng rng(derive_seed(10, 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng), y = u(rng);
    EXPECT_NEAR(fbm_covariance(x, y, 0.5), std::min(x, y), 1e-14);
  }
}

TEST(FbmCovariance, PositiveSemidefiniteOnRandomPoints) {
  Rng rng(derive_seed(11, 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double alpha = 0.05 + 0.9 * u(rng);
    const int n = 2 + trial % 8;
    Eigen::MatrixXd K(n, n);
    std::vector<double> x(static_cast<std::size_t>(2 * n));
    for (auto& v : x) v = u(rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        K(i, j) = fbm_covariance(std::span<const double>(&x[2 * i], 2), std::span<const double>(&x[2 * j], 2), alpha);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12) << "alpha " << alpha;
  }
}

TEST(Grid, UniformLayout) {
  const auto g = Grid::uniform(2, 2, 0.0, 1.0);
  ASSERT_EQ(g.size(), 9u);
  EXPECT_DOUBLE_EQ(g.point(1)[0], 0.5);
  EXPECT_DOUBLE_EQ(g.point(1)[1], 0.0);
  EXPECT_DOUBLE_EQ(g.point(3)[0], 0.0);
  EXPECT_DOUBLE_EQ(g.point(3)[1], 0.5);
}

TEST(SampleField, OriginIsZeroAndSeedsReproduce) {
  const auto spec = FieldSpec::fbm(0.4, 1, 2);
  const auto grid = Grid::uniform(1, 64, 0.0, 1.0);
  for (auto method : {SamplingMethod::ExactCholesky, SamplingMethod::Circulant1d}) {
    const auto a = sample_field(spec, grid, 77, method);
    const auto b = sample_field(spec, grid, 77, method);
    const auto c = sample_field(spec, grid, 78, method);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
    EXPECT_EQ(a.value(0, 0), 0.0);
    EXPECT_EQ(a.value(0, 1), 0.0);
    EXPECT_NE(a.value(10, 0), a.value(10, 1));
  }
}

TEST(SampleField, RejectsUnsupportedCombinations) {
  const auto grid2 = Grid::uniform(2, 4, 0.0, 1.0);
  EXPECT_THROW(sample_field(FieldSpec::fbm(0.5, 2), grid2, 1, SamplingMethod::Circulant1d), InvalidArgument);
  EXPECT_THROW(sample_field(FieldSpec::fbm(0.5), Grid::uniform(1, 4, 0.5, 1.0), 1, SamplingMethod::Circulant1d),
               InvalidArgument);
  EXPECT_THROW(sample_field(FieldSpec::fbm(0.5), Grid::uniform(1, 4, 0.0, 1.0), 1, SamplingMethod::Spectral),
               Unsupported);
  EXPECT_THROW(sample_field(FieldSpec::fbm(0.5), grid2, 1, SamplingMethod::ExactCholesky), InvalidArgument);
}

TEST(SampleField, CirculantAndCholeskyMatchCovariance) {
  // 3000 replicates each; entries must sit within 5 standard errors of the exact covariance.
  const double alpha = 0.3;
  const auto spec = FieldSpec::fbm(alpha);
  const auto grid = Grid::uniform(1, 16, 0.0, 1.0);
  const std::vector<std::size_t> nodes{2, 5, 11, 16};
  for (auto method : {SamplingMethod::ExactCholesky, SamplingMethod::Circulant1d}) {
    std::vector<FieldSample> samples;
    for (int r = 0; r < 3000; ++r) samples.push_back(sample_field(spec, grid, derive_seed(5, static_cast<std::uint64_t>(r)), method));
    const auto C = sample_covariance(samples, nodes);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double xi = grid.point(nodes[i])[0], xj = grid.point(nodes[j])[0];
        const double exact = fbm_covariance(xi, xj, alpha);
        const double se = std::sqrt((exact * exact + fbm_covariance(xi, xi, alpha) * fbm_covariance(xj, xj, alpha)) / 3000.0);
        EXPECT_NEAR(C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), exact, 5 * se)
            << to_string(method) << " " << i << "," << j;
      }
  }
}

TEST(RieszBessel, NormalisedAtUnitLag) {
  EXPECT_NEAR(FieldSpec::riesz_bessel(0.3, 0.5).variogram(1.0), 1.0, 1e-12);
  EXPECT_NEAR(FieldSpec::riesz_bessel(0.7, 0.6, 2).variogram(1.0), 1.0, 1e-12);
}

TEST(RieszBessel, PureRieszIsPowerLaw) {
  // beta = 0: density |l|^(-2 gamma) gives a variogram proportional to h^(2 gamma - 1).
  const auto f = FieldSpec::riesz_bessel(0.8, 0.0);
  for (double h : {0.01, 0.1, 0.5, 2.0, 7.0}) EXPECT_NEAR(f.variogram(h) / std::pow(h, 0.6), 1.0, 1e-5) << h;
}

TEST(RieszBessel, NearlyBesselIsOrnsteinUhlenbeck) {
  // gamma -> 0, beta = 1: density (1 + l^2)^-1 gives a variogram proportional to 1 - exp(-h).
  const auto f = FieldSpec::riesz_bessel(1e-7, 1.0);
  const double norm = 1.0 - std::exp(-1.0);
  for (double h : {0.05, 0.3, 1.5, 4.0}) EXPECT_NEAR(f.variogram(h), (1.0 - std::exp(-h)) / norm, 1e-4) << h;
}

TEST(RieszBessel, IndexAndValidation) {
  EXPECT_DOUBLE_EQ(FieldSpec::riesz_bessel(0.3, 0.5).riesz_bessel_index(), 0.3);
  EXPECT_THROW(FieldSpec::riesz_bessel(0.2, 0.2), InvalidArgument);
  EXPECT_THROW(FieldSpec::riesz_bessel(0.6, 0.6, 3), InvalidArgument);
  EXPECT_THROW(FieldSpec::riesz_bessel(0.4, 1.5).psi(), Unsupported);
}

TEST(InfinityScale, ConstantHurstMatchesFbmConstant) {
  // Oracle: 4 h^(2H) int_0^inf (1 - cos u) u^(-1-2H) du = 2 pi h^(2H) / (Gamma(2H+1) sin(pi H)).
  for (double H : {0.3, 0.6}) {
    const auto f = FieldSpec::infinity_scale(std::vector<double>(40, H), 39);
    const double c = 2.0 * std::numbers::pi / (std::tgamma(2.0 * H + 1.0) * std::sin(std::numbers::pi * H));
    // The far-tail expansion used once h * rho > 100 carries a relative error near 1e-6.
    for (double h : {0.01, 0.1, 0.7}) EXPECT_NEAR(f.variogram(h) / (c * std::pow(h, 2 * H)), 1.0, 1e-5) << H << " " << h;
  }
}

TEST(InfinityScale, SpectralSamplerVariogramConverges) {
  const auto f = FieldSpec::infinity_scale({0.4, 0.4, 0.6, 0.4, 0.6, 0.4, 0.6, 0.4}, 7);
  SpectralOptions o;
  o.bins_per_annulus = 256;
  for (double h : {0.05, 0.2, 0.5}) EXPECT_NEAR(spectral_variogram(f, h, o) / f.variogram(h), 1.0, 0.02) << h;
}

TEST(Psi, IndicesAndDoubling) {
  const PsiModel p(PowerLaw{0.3});
  EXPECT_NEAR(doubling_constant(p, 1e-4, 1.0), std::pow(2.0, 0.6), 1e-12);
  const auto idx = psi_indices(FieldSpec::infinity_scale({0.9, 0.2, 0.5, 0.35}, 3, 1).psi());
  EXPECT_DOUBLE_EQ(idx.lower, 0.2);
  EXPECT_DOUBLE_EQ(idx.upper, 0.5);
  const PsiModel t(Tabulated{{{-2.0, -1.0}, {0.0, 0.0}}});
  EXPECT_NEAR(t(std::exp(-1.0)), std::exp(-0.5), 1e-14);
  EXPECT_THROW(psi_indices(t), Unsupported);
}

TEST(Lacunarity, ConstantSequenceIsVacuous) {
  const std::vector<double> h(10, 0.5);
  EXPECT_EQ(check_lacunarity(h, 0.1).status, LacunarityStatus::Vacuous);
}

TEST(Lacunarity, GeometricBlocksHoldAndDenseAlternationFails) {
  // Blocks of length 8^i alternate between 0.7 and 0.3; with eps 0.1 the ratio is (0.6*0.8)/(0.2*0.4) = 6.
  std::vector<double> sparse;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < (1 << (3 * i)); ++j) sparse.push_back(i % 2 ? 0.3 : 0.7);
  const auto holds = check_lacunarity(sparse, 0.1, 1);
  EXPECT_NEAR(holds.ratio, 6.0, 1e-12);
  EXPECT_EQ(holds.status, LacunarityStatus::HoldsForTail);

  std::vector<double> dense;
  for (int i = 0; i < 20; ++i) dense.push_back(i % 2 ? 0.3 : 0.7);
  const auto fails = check_lacunarity(dense, 0.1);
  EXPECT_EQ(fails.status, LacunarityStatus::FailsAtK);
  EXPECT_EQ(fails.witness_k, 1);
  EXPECT_EQ(fails.times[0], 0u);
  EXPECT_EQ(fails.times[1], 1u);
}

TEST(ConditionalVariance, BrownianBridgeOracle) {
  const auto bm = FieldSpec::fbm(0.5);
  const double x = 0.6;
  std::vector<std::vector<double>> none;
  EXPECT_NEAR(conditional_variance(bm, std::span<const double>(&x, 1), none).variance, 0.6, 1e-14);
  std::vector<std::vector<double>> left{{0.2}};
  EXPECT_NEAR(conditional_variance(bm, std::span<const double>(&x, 1), left).variance, 0.4, 1e-12);
  std::vector<std::vector<double>> both{{0.2}, {0.9}, {0.1}};
  EXPECT_NEAR(conditional_variance(bm, std::span<const double>(&x, 1), both).variance, 0.4 * 0.3 / 0.7, 1e-12);
  std::vector<std::vector<double>> same{{0.6}};
  EXPECT_EQ(conditional_variance(bm, std::span<const double>(&x, 1), same).variance, 0.0);
}

TEST(ConditionalVariance, MonotoneInConditioningSet) {
  Rng rng(derive_seed(12, 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto spec = FieldSpec::fbm(0.1 + 0.8 * u(rng));
    const double x = u(rng);
    std::vector<std::vector<double>> ys;
    double prev = spec.variance(std::span<const double>(&x, 1));
    for (int k = 0; k < 6; ++k) {
      ys.push_back({u(rng)});
      const double v = conditional_variance(spec, std::span<const double>(&x, 1), ys).variance;
      EXPECT_LE(v, prev * (1 + 1e-9) + 1e-12);
      prev = v;
    }
  }
}

TEST(SlnScan, BrownianRatioIsOneHalf) {
  SlnOptions o;
  o.spacing = 1.0 / 64;
  o.r0 = 0.25;
  o.x_stride = 2;
  const std::vector<double> radii{1.0 / 8, 1.0 / 16, 1.0 / 32};
  for (const auto& s : sln_ratio_scan(FieldSpec::fbm(0.5), o, radii)) EXPECT_NEAR(s.min_ratio, 0.5, 1e-9) << s.r;
}

TEST(Diagnostics, VariogramAndModulusOnHandSamples) {
  const auto grid = Grid::uniform(1, 4, 0.0, 1.0);
  const auto spec = FieldSpec::fbm(0.5);
  FieldSample a{grid, spec, 0, SamplingMethod::ExactCholesky, 0.0, {0, 1, 0, 2, 2}};
  FieldSample b{grid, spec, 0, SamplingMethod::ExactCholesky, 0.0, {0, 0, 0, 0, 0}};
  const std::vector<FieldSample> both{a, b};
  const std::vector<double> lags{0.25, 0.5};
  const auto v = variogram(both, lags);
  // Sample a: squared steps 1,1,4,0 -> 1.5; lag 2: 0,1,4 -> 5/3. Sample b is flat.
  EXPECT_DOUBLE_EQ(v[0].value, 0.75);
  EXPECT_DOUBLE_EQ(v[0].std_error, 0.75);
  EXPECT_NEAR(v[1].value, 5.0 / 6.0, 1e-15);
  EXPECT_EQ(v[0].pairs, 8u);
  const std::vector<double> deltas{0.25, 0.5, 1.0};
  const auto w = modulus_of_continuity(a, deltas);
  EXPECT_DOUBLE_EQ(w[0].omega, 2.0);
  EXPECT_DOUBLE_EQ(w[1].omega, 2.0);
  EXPECT_DOUBLE_EQ(w[2].omega, 2.0);
  const std::vector<double> bad{0.3};
  EXPECT_THROW(variogram(both, bad), InvalidArgument);
}
