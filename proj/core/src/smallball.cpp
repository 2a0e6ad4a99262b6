#include "qdim/smallball.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "detail.hpp"
#include "qdim/error.hpp"
#include "qdim/rng.hpp"
#include "qdim/tree.hpp"
#include "qdim/ultrametric.hpp"

namespace qdim {

using detail::require;

SmallBallReport verify_smallball(const FieldSpec& spec, const SmallBallOptions& o) {
  const auto* fbm = std::get_if<Fbm>(&spec.variant());
  if (!fbm) throw Unsupported("small-ball verification is implemented for fBm only");
  const int n = static_cast<int>(o.x.size());
  const int N = spec.domain_dim(), d = spec.range_dim();
  require(n >= 1 && n <= 3, "small-ball check needs 1 <= n <= 3 points");
  require(o.s > 0.0 && o.s <= d, "s must lie in (0, d]");
  require(o.replicates >= 1 && !o.radii.empty(), "need replicates and radii");
  auto inside = [&](const std::vector<double>& p) {
    return static_cast<int>(p.size()) == N &&
           std::all_of(p.begin(), p.end(), [](double c) { return c >= 0.0 && c < 0.5; });
  };
  require(inside(o.y), "y must lie in [0,1/2)^N");
  for (const auto& p : o.x) require(inside(p), "points must lie in [0,1/2)^N");
  for (double r : o.radii) require(r > 0.0, "radii must be positive");

  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  // Increments Z_i = X0(y) - X0(x_i) per coordinate.
  Eigen::MatrixXd C(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      C(i, j) = 0.5 * (spec.variogram(dist(o.y, o.x[static_cast<std::size_t>(i)])) +
                       spec.variogram(dist(o.y, o.x[static_cast<std::size_t>(j)])) -
                       spec.variogram(dist(o.x[static_cast<std::size_t>(i)], o.x[static_cast<std::size_t>(j)])));
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) throw NumericalFailure("increment covariance is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();

  Rng rng(derive_seed(o.seed, 0));
  std::normal_distribution<double> normal;
  std::vector<double> worst(o.replicates);
  Eigen::VectorXd z(n), w(n);
  std::vector<double> norm2(static_cast<std::size_t>(n));
  for (std::uint64_t t = 0; t < o.replicates; ++t) {
    std::fill(norm2.begin(), norm2.end(), 0.0);
    for (int c = 0; c < d; ++c) {
      for (int i = 0; i < n; ++i) z(i) = normal(rng);
      w.noalias() = L * z;
      for (int i = 0; i < n; ++i) norm2[static_cast<std::size_t>(i)] += w(i) * w(i);
    }
    worst[t] = std::sqrt(*std::max_element(norm2.begin(), norm2.end()));
  }
  std::sort(worst.begin(), worst.end());

  SmallBallReport rep;
  rep.n = n;
  rep.s = o.s;
  rep.m = 2 * n * n * N + 2;
  rep.target = o.s * n;
  std::vector<std::vector<double>> pts(o.x.begin(), o.x.end());
  pts.push_back(o.y);
  for (const auto& id : translation_family(rep.m, N))
    rep.phi_sum += std::pow(phi_a(pts, id), fbm->alpha * o.s);

  const double total = static_cast<double>(o.replicates);
  std::vector<double> lx, ly;
  for (double r : o.radii) {
    SmallBallPoint p{};
    p.r = r;
    p.hits = static_cast<std::uint64_t>(std::upper_bound(worst.begin(), worst.end(), r) - worst.begin());
    p.probability = static_cast<double>(p.hits) / total;
    p.std_error = std::sqrt(p.probability * (1.0 - p.probability) / total);
    p.flagged = p.hits < o.min_hits;
    p.bound_term = std::pow(r, rep.target) * rep.phi_sum;
    p.ratio = p.probability / p.bound_term;
    if (n == 1 && d == 1) p.closed_form = std::erf(r / std::sqrt(2.0 * C(0, 0)));
    if (!p.flagged) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(p.probability));
      rep.fitted_constant = std::max(rep.fitted_constant, p.ratio);
    }
    rep.points.push_back(p);
  }
  rep.fitted_points = static_cast<int>(lx.size());
  if (lx.size() >= 2) {
    const double k = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= k;
    my /= k;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    rep.slope = sxy / sxx;
    if (lx.size() > 2) {
      double rss = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - my - rep.slope * (lx[i] - mx);
        rss += e * e;
      }
      rep.slope_std_error = std::sqrt(rss / (k - 2.0) / sxx);
    }
    rep.slope_within = std::abs(rep.slope - rep.target) <= o.tolerance;
    rep.slope_above = rep.slope >= rep.target - 2.0 * o.tolerance;
  }
  return rep;
}

}  // namespace qdim
