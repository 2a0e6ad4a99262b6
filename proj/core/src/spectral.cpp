#include <cmath>
#include <numbers>

#include "detail.hpp"
#include "sampling_internal.hpp"

namespace qdim {

using detail::require;

namespace {

struct Frequencies {
  int dim = 1;
  std::vector<double> lambda;     // flattened
  std::vector<double> amplitude;  // a_k with Var increment = sum a_k^2 (2 - 2 cos <lambda_k, h>)
};

// Spectral mass of both half-lines (N = 1) or both half-planes (N = 2) is folded into a_k^2.
Frequencies build_frequencies(const FieldSpec& spec, const SpectralOptions& o) {
  require(o.lambda_min > 0.0 && o.lambda_max > o.lambda_min, "bad spectral range");
  Frequencies f;
  f.dim = spec.domain_dim();
  if (const auto* is = std::get_if<InfinityScale>(&spec.variant())) {
    require(o.bins_per_annulus >= 1, "bins_per_annulus must be >= 1");
    const int B = o.bins_per_annulus;
    // D_0 is log-binned down to lambda_min; outer annuli are binned linearly.
    const double l0 = std::log(o.lambda_min);
    for (int b = 0; b < B; ++b) {
      const double lo = std::exp(l0 * (1.0 - static_cast<double>(b) / B));
      const double hi = std::exp(l0 * (1.0 - static_cast<double>(b + 1) / B));
      const double mid = std::sqrt(lo * hi);
      f.lambda.push_back(mid);
      f.amplitude.push_back(std::sqrt(2.0 * spec.spectral_density(mid) * (hi - lo)));
    }
    for (int j = 1; j <= is->j_max; ++j) {
      const double a = std::ldexp(1.0, j - 1), width = a / B;
      for (int b = 0; b < B; ++b) {
        const double mid = a + (b + 0.5) * width;
        f.lambda.push_back(mid);
        f.amplitude.push_back(std::sqrt(2.0 * spec.spectral_density(mid) * width));
      }
    }
    return f;
  }
  require(o.radial >= 1, "radial frequency count must be >= 1");
  const double step = std::log(o.lambda_max / o.lambda_min) / o.radial;
  if (f.dim == 1) {
    for (int k = 0; k < o.radial; ++k) {
      const double r = o.lambda_min * std::exp((k + 0.5) * step);
      f.lambda.push_back(r);
      f.amplitude.push_back(std::sqrt(2.0 * spec.spectral_density(r) * r * step));
    }
    return f;
  }
  require(f.dim == 2 && o.angular >= 1, "spectral sampling supports N = 1, 2");
  const double dtheta = std::numbers::pi / o.angular;
  for (int k = 0; k < o.radial; ++k) {
    const double r = o.lambda_min * std::exp((k + 0.5) * step);
    const double a = std::sqrt(2.0 * spec.spectral_density(r) * r * (r * step) * dtheta);
    for (int t = 0; t < o.angular; ++t) {
      const double th = (t + 0.5) * dtheta;
      f.lambda.push_back(r * std::cos(th));
      f.lambda.push_back(r * std::sin(th));
      f.amplitude.push_back(a);
    }
  }
  return f;
}

}  // namespace

namespace detail {

void sample_spectral(const FieldSpec& spec, const Grid& grid, std::uint64_t seed, const SpectralOptions& options,
                     std::vector<double>& values) {
  const Frequencies f = build_frequencies(spec, options);
  const std::size_t K = f.amplitude.size();
  const int d = spec.range_dim();
  const auto N = static_cast<std::size_t>(f.dim);
  values.assign(grid.size() * static_cast<std::size_t>(d), 0.0);
  for (int c = 0; c < d; ++c) {
    const auto z = normals(seed, c, 2 * K);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto t = grid.point(i);
      double x = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        double phase = 0.0;
        for (std::size_t a = 0; a < N; ++a) phase += f.lambda[k * N + a] * t[a];
        x += f.amplitude[k] * (z[2 * k] * (std::cos(phase) - 1.0) + z[2 * k + 1] * std::sin(phase));
      }
      values[i * d + c] = x;
    }
  }
}

}  // namespace detail

double spectral_variogram(const FieldSpec& spec, double h, const SpectralOptions& options) {
  if (std::holds_alternative<Fbm>(spec.variant()))
    throw Unsupported("spectral sampling is provided for riesz-bessel and infinity-scale fields");
  const Frequencies f = build_frequencies(spec, options);
  double v = 0.0;
  for (std::size_t k = 0; k < f.amplitude.size(); ++k) {
    const double a = f.amplitude[k];
    v += a * a * (2.0 - 2.0 * std::cos(f.lambda[k * static_cast<std::size_t>(f.dim)] * h));
  }
  return v;
}

}  // namespace qdim
