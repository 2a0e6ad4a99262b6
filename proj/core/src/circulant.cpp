#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>

#include "detail.hpp"
#include "qdim/rng.hpp"
#include "sampling_internal.hpp"

namespace qdim {

using detail::require;

namespace detail {

std::vector<double> normals(std::uint64_t seed, int coord, std::size_t count) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(coord)));
  std::normal_distribution<double> z;
  std::vector<double> out(count);
  for (auto& v : out) v = z(rng);
  return out;
}

}  // namespace detail

namespace {

constexpr std::size_t kMaxCholeskyPoints = 4096;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Variogram lookups repeat heavily on grids; memoise for the quadrature-backed specs.
class VariogramCache {
 public:
  explicit VariogramCache(const FieldSpec& spec) : spec_(spec), fbm_(std::holds_alternative<Fbm>(spec.variant())) {}
  double operator()(double h) {
    if (fbm_ || h == 0.0) return spec_.variogram(h);
    auto it = memo_.find(h);
    if (it != memo_.end()) return it->second;
    return memo_[h] = spec_.variogram(h);
  }

 private:
  const FieldSpec& spec_;
  bool fbm_;
  std::map<double, double> memo_;
};

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double dist(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

void sample_cholesky(const FieldSpec& spec, const Grid& grid, std::uint64_t seed, std::vector<double>& values,
                     double& jitter) {
  require(grid.size() <= kMaxCholeskyPoints,
          "exact-cholesky supports at most " + std::to_string(kMaxCholeskyPoints) + " grid points");
  VariogramCache vg(spec);
  // Points with zero variance (the origin) are pinned to 0 and left out of the factorisation.
  std::vector<std::size_t> live;
  std::vector<double> var(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    var[i] = vg(norm(grid.point(i)));
    if (var[i] > 0.0) live.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b <= a; ++b) {
      const auto i = live[static_cast<std::size_t>(a)], j = live[static_cast<std::size_t>(b)];
      K(a, b) = K(b, a) = 0.5 * (var[i] + var[j] - vg(dist(grid.point(i), grid.point(j))));
    }
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  jitter = 0.0;
  if (llt.info() != Eigen::Success) {
    jitter = 1e-12 * K.trace() / static_cast<double>(n);
    K.diagonal().array() += jitter;
    llt.compute(K);
    if (llt.info() != Eigen::Success)
      throw NumericalFailure("covariance matrix is not positive definite even after jitter " + std::to_string(jitter));
  }
  const Eigen::MatrixXd L = llt.matrixL();
  const int d = spec.range_dim();
  values.assign(grid.size() * static_cast<std::size_t>(d), 0.0);
  for (int c = 0; c < d; ++c) {
    const auto z = detail::normals(seed, c, live.size());
    const Eigen::VectorXd x = L * Eigen::Map<const Eigen::VectorXd>(z.data(), n);
    for (Eigen::Index a = 0; a < n; ++a) values[live[static_cast<std::size_t>(a)] * d + c] = x(a);
  }
}

// Eigenvalues of the circulant embedding of the increment autocovariance, size 2L.
std::vector<double> embedding_eigenvalues(VariogramCache& vg, double h, std::size_t L) {
  const std::size_t M = 2 * L;
  auto gamma = [&](std::size_t k) {
    const double kk = static_cast<double>(k);
    return 0.5 * (vg((kk + 1.0) * h) - 2.0 * vg(kk * h) + vg(std::abs(kk - 1.0) * h));
  };
  std::vector<double> row(M);
  for (std::size_t k = 0; k <= L; ++k) row[k] = gamma(k);
  for (std::size_t k = L + 1; k < M; ++k) row[k] = row[M - k];
  std::vector<std::complex<double>> out(M / 2 + 1);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(M), row.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  std::vector<double> lambda(M);
  for (std::size_t k = 0; k < M; ++k) lambda[k] = (k <= M / 2 ? out[k] : out[M - k]).real();
  return lambda;
}

void sample_circulant(const FieldSpec& spec, const Grid& grid, std::uint64_t seed, std::vector<double>& values) {
  require(grid.dim == 1 && grid.is_uniform && spec.domain_dim() == 1, "circulant-1d needs N = 1 and a uniform grid");
  require(grid.lo == 0.0, "circulant-1d needs a grid starting at the origin");
  const std::size_t n = grid.cells;  // increments
  VariogramCache vg(spec);
  std::size_t L = n;
  std::vector<double> lambda;
  for (int attempt = 0;; ++attempt) {
    lambda = embedding_eigenvalues(vg, grid.spacing, L);
    const double top = *std::max_element(lambda.begin(), lambda.end());
    const double low = *std::min_element(lambda.begin(), lambda.end());
    if (low >= -1e-10 * top) break;
    if (attempt == 1)
      throw NumericalFailure("circulant embedding has negative eigenvalue " + std::to_string(low) +
                             " even at doubled size");
    L *= 2;
  }
  const std::size_t M = 2 * L;
  const int d = spec.range_dim();
  values.assign(grid.size() * static_cast<std::size_t>(d), 0.0);
  std::vector<std::complex<double>> w(M);
  for (int c = 0; c < d; ++c) {
    const auto z = detail::normals(seed, c, 2 * M);
    for (std::size_t k = 0; k < M; ++k)
      w[k] = std::sqrt(std::max(lambda[k], 0.0) / static_cast<double>(M)) * std::complex<double>(z[2 * k], z[2 * k + 1]);
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      plan = fftw_plan_dft_1d(static_cast<int>(M), reinterpret_cast<fftw_complex*>(w.data()),
                              reinterpret_cast<fftw_complex*>(w.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
    double acc = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      acc += w[i - 1].real();
      values[i * d + c] = acc;
    }
  }
}

}  // namespace

FieldSample sample_field(const FieldSpec& spec, const Grid& grid, std::uint64_t seed, SamplingMethod method,
                         const SpectralOptions& options) {
  require(grid.dim == spec.domain_dim(), "grid dimension does not match the field's domain dimension");
  require(grid.size() > 0, "grid is empty");
  FieldSample s{grid, spec, seed, method, 0.0, {}};
  switch (method) {
    case SamplingMethod::ExactCholesky: sample_cholesky(spec, grid, seed, s.values, s.jitter); break;
    case SamplingMethod::Circulant1d: sample_circulant(spec, grid, seed, s.values); break;
    case SamplingMethod::Spectral:
      if (std::holds_alternative<Fbm>(spec.variant()))
        throw Unsupported("spectral sampling is provided for riesz-bessel and infinity-scale fields");
      detail::sample_spectral(spec, grid, seed, options, s.values);
      break;
  }
  return s;
}

}  // namespace qdim
