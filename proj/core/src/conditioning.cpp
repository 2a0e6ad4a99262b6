#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "qdim/fields.hpp"

namespace qdim {

using detail::require;

ConditionalVariance conditional_variance(const FieldSpec& spec, std::span<const double> x,
                                         std::span<const std::vector<double>> conditioners) {
  const auto N = static_cast<std::size_t>(spec.domain_dim());
  require(x.size() == N, "point dimension does not match the field");
  std::vector<std::vector<double>> ys;
  for (const auto& y : conditioners) {
    require(y.size() == N, "conditioner dimension does not match the field");
    if (std::equal(y.begin(), y.end(), x.begin())) return {0.0, 0.0};
    if (spec.variance(y) == 0.0) continue;  // X0 vanishes there; no information
    if (std::find(ys.begin(), ys.end(), y) == ys.end()) ys.push_back(y);
  }
  const double sigma2 = spec.variance(x);
  if (ys.empty() || sigma2 == 0.0) return {sigma2, 0.0};

  const auto n = static_cast<Eigen::Index>(ys.size());
  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i) = spec.covariance(x, ys[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j <= i; ++j)
      K(i, j) = K(j, i) = spec.covariance(ys[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]);
  }
  double jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    jitter = 1e-12 * K.trace() / static_cast<double>(n);
    K.diagonal().array() += jitter;
    llt.compute(K);
    if (llt.info() != Eigen::Success)
      throw NumericalFailure("conditioner covariance is not positive definite after jitter");
  }
  const Eigen::VectorXd w = llt.matrixL().solve(c);
  return {std::max(0.0, sigma2 - w.squaredNorm()), jitter};
}

std::vector<SlnRatio> sln_ratio_scan(const FieldSpec& spec, const SlnOptions& o, std::span<const double> radii) {
  require(std::holds_alternative<Fbm>(spec.variant()) && spec.domain_dim() == 1,
          "sln_ratio_scan is provided for fbm with N = 1");
  require(o.T > 0.0 && o.r0 > 0.0 && o.spacing > 0.0 && o.x_stride >= 1, "bad sln scan options");
  const PsiModel psi = spec.psi();
  const auto nodes = static_cast<long>(std::llround(o.T / o.spacing));
  std::vector<SlnRatio> out;
  for (double r : radii) {
    require(r > 0.0 && r <= o.r0, "radii must lie in (0, r0]");
    SlnRatio best{r, std::numeric_limits<double>::infinity(), 0.0};
    for (long i = o.x_stride; i <= nodes; i += o.x_stride) {
      const double x = static_cast<double>(i) * o.spacing;
      if (x < r) continue;
      std::vector<std::vector<double>> ys;
      for (long j = -nodes; j <= nodes; ++j) {
        const double y = static_cast<double>(j) * o.spacing;
        const double dist = std::abs(x - y);
        if (dist >= r * (1.0 - 1e-12) && dist <= o.r0 * (1.0 + 1e-12)) ys.push_back({y});
      }
      const double v = conditional_variance(spec, std::span<const double>(&x, 1), ys).variance;
      const double ratio = v / psi(r);
      if (ratio < best.min_ratio) best = {r, ratio, x};
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace qdim
