#include "qdim/fields.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>

#include "detail.hpp"

namespace qdim {

using detail::require;

namespace {

double gk(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-11);
}

// int_a^b 2 (1 - cos(h rho)) g(rho) d rho. Panels double geometrically and never span
// more than four oscillation periods.
double one_minus_cos_integral(const std::function<double(double)>& g, double h, double a, double b) {
  double total = 0.0;
  const double period = 2.0 * std::numbers::pi / h;
  double lo = a;
  while (lo < b) {
    double hi = lo > 0.0 ? std::min(2.0 * lo, lo + 4.0 * period) : std::min(1.0, 4.0 * period);
    hi = std::min(b, hi);
    total += gk([&](double r) { return 2.0 * (1.0 - std::cos(h * r)) * g(r); }, lo, hi);
    lo = hi;
  }
  return total;
}

// int_a^b 2 (1 - cos(h rho)) rho^(-p) d rho with p > 1. Once h*a is large the cosine part
// is replaced by three terms of its integration-by-parts expansion (relative error ~ (h a)^-3).
double power_one_minus_cos(double p, double h, double a, double b) {
  if (h * a < 100.0) return one_minus_cos_integral([p](double r) { return std::pow(r, -p); }, h, a, b);
  auto prim = [&](double r) {
    const double s = std::sin(h * r), c = std::cos(h * r);
    return s * std::pow(r, -p) / h - p * c * std::pow(r, -p - 1.0) / (h * h) -
           p * (p + 1.0) * s * std::pow(r, -p - 2.0) / (h * h * h);
  };
  const double plain = (std::pow(a, 1.0 - p) - std::pow(b, 1.0 - p)) / (p - 1.0);
  return 2.0 * (plain - (prim(b) - prim(a)));
}

// int_A^inf w(rho) cos(h rho) d rho via a shifted Ooura transform.
double cos_tail(const std::function<double(double)>& w, double h, double A) {
  static thread_local boost::math::quadrature::ooura_fourier_cos<double> cosq;
  static thread_local boost::math::quadrature::ooura_fourier_sin<double> sinq;
  auto shifted = [&](double t) { return w(A + t); };
  const double c = cosq.integrate(shifted, h).first;
  const double s = sinq.integrate(shifted, h).first;
  return std::cos(h * A) * c - std::sin(h * A) * s;
}

double sin_tail(const std::function<double(double)>& w, double h, double A) {
  static thread_local boost::math::quadrature::ooura_fourier_cos<double> cosq;
  static thread_local boost::math::quadrature::ooura_fourier_sin<double> sinq;
  auto shifted = [&](double t) { return w(A + t); };
  const double c = cosq.integrate(shifted, h).first;
  const double s = sinq.integrate(shifted, h).first;
  return std::sin(h * A) * c + std::cos(h * A) * s;
}

double plain_tail(const std::function<double(double)>& w, double A) {
  boost::math::quadrature::exp_sinh<double> es;
  return es.integrate([&](double t) { return w(A + t); }, 1e-12);
}

// Unnormalised Riesz-Bessel variogram at lag h > 0.
double riesz_bessel_raw(double gamma, double beta, int N, double h) {
  auto g = [=](double r) { return std::pow(r, -2.0 * gamma) * std::pow(1.0 + r * r, -beta); };
  const double A = std::max(8.0, 64.0 * std::numbers::pi / h);
  if (N == 1) {
    // 2 * int_0^inf 2(1 - cos h rho) g d rho  (both signs of lambda)
    double body = one_minus_cos_integral(g, h, 0.0, A);
    double tail = 2.0 * plain_tail(g, A) - 2.0 * cos_tail(g, h, A);
    return 2.0 * (body + tail);
  }
  // N = 2: 2 pi int_0^inf 2 (1 - J0(h rho)) rho g(rho) d rho
  auto rg = [=](double r) { return r * g(r); };
  double body = 0.0;
  const double period = 2.0 * std::numbers::pi / h;
  for (double lo = 0.0; lo < A; lo += 4.0 * period) {
    const double hi = std::min(A, lo + 4.0 * period);
    body += gk([&](double r) { return 2.0 * (1.0 - std::cyl_bessel_j(0.0, h * r)) * rg(r); }, lo, hi);
  }
  // J0(z) ~ sqrt(2/(pi z)) cos(z - pi/4) for the oscillating tail.
  auto amp = [=](double r) { return rg(r) * std::sqrt(2.0 / (std::numbers::pi * h * r)); };
  const double c = std::cos(std::numbers::pi / 4), s = std::sin(std::numbers::pi / 4);
  double osc = c * cos_tail(amp, h, A) + s * sin_tail(amp, h, A);
  double tail = 2.0 * plain_tail(rg, A) - 2.0 * osc;
  return 2.0 * std::numbers::pi * (body + tail);
}

// Infinity-scale variogram, N = 1, c = 1.
double infinity_scale_raw(const std::vector<double>& hurst, int j_max, double h) {
  double total = 0.0;
  for (int j = 0; j <= j_max; ++j) {
    const double H = hurst[std::min<std::size_t>(static_cast<std::size_t>(j), hurst.size() - 1)];
    const double a = j == 0 ? 0.0 : std::ldexp(1.0, j - 1);
    const double b = std::ldexp(1.0, j);
    total += 2.0 * power_one_minus_cos(2.0 * H + 1.0, h, a, b);
  }
  return total;
}

void validate_hurst(const std::vector<double>& hurst, std::size_t tail_start) {
  require(!hurst.empty(), "hurst sequence is empty");
  require(tail_start < hurst.size(), "tail_start beyond the hurst sequence");
  for (double H : hurst) require(std::isfinite(H) && H > 0.0 && H < 1.0, "hurst exponents must lie in (0,1)");
}

}  // namespace

// ------------------------------------------------------------------- PsiModel

PsiModel::PsiModel(PsiVariant v) : v_(std::move(v)) {
  if (const auto* p = std::get_if<PowerLaw>(&v_)) {
    require(p->alpha > 0.0 && p->alpha < 1.0, "power-law psi needs 0 < alpha < 1");
  } else if (const auto* d = std::get_if<DyadicPiecewise>(&v_)) {
    validate_hurst(d->hurst, d->tail_start);
  } else {
    const auto& t = std::get<Tabulated>(v_).log_log;
    require(t.size() >= 2, "tabulated psi needs at least two points");
    for (std::size_t i = 1; i < t.size(); ++i) require(t[i].first > t[i - 1].first, "tabulated log r must increase");
  }
}

double PsiModel::operator()(double r) const {
  require(r >= 0.0, "psi argument must be >= 0");
  if (r == 0.0) return 0.0;
  if (const auto* p = std::get_if<PowerLaw>(&v_)) return std::pow(r, 2.0 * p->alpha);
  if (const auto* d = std::get_if<DyadicPiecewise>(&v_))
    return infinity_scale_raw(d->hurst, static_cast<int>(d->hurst.size()) - 1, r);
  const auto& t = std::get<Tabulated>(v_).log_log;
  const double x = std::log(r);
  std::size_t i = 1;
  while (i + 1 < t.size() && x > t[i].first) ++i;
  const auto& [x0, y0] = t[i - 1];
  const auto& [x1, y1] = t[i];
  return std::exp(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
}

double doubling_constant(const PsiModel& psi, double r_min, double r_max, int points) {
  require(r_min > 0.0 && r_max > r_min && points >= 2, "bad doubling grid");
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double r = r_min * std::pow(r_max / r_min, static_cast<double>(i) / (points - 1));
    worst = std::max(worst, psi(2.0 * r) / psi(r));
  }
  return worst;
}

PsiIndices psi_indices(const PsiModel& psi) {
  if (const auto* p = std::get_if<PowerLaw>(&psi.variant())) return {p->alpha, p->alpha};
  if (const auto* d = std::get_if<DyadicPiecewise>(&psi.variant())) {
    auto first = d->hurst.begin() + static_cast<std::ptrdiff_t>(d->tail_start);
    auto [lo, hi] = std::minmax_element(first, d->hurst.end());
    return {*lo, *hi};
  }
  throw Unsupported("indices of a tabulated psi are limits that a finite table cannot certify");
}

std::string to_string(LacunarityStatus s) {
  switch (s) {
    case LacunarityStatus::HoldsForTail: return "holds-for-tail";
    case LacunarityStatus::FailsAtK: return "fails-at-k";
    default: return "vacuous";
  }
}

LacunarityResult check_lacunarity(std::span<const double> hurst, double eps, int burn_in, std::size_t tail_start) {
  require(!hurst.empty() && tail_start < hurst.size(), "hurst tail is empty");
  auto tail = hurst.subspan(tail_start);
  const double hi = *std::max_element(tail.begin(), tail.end());
  const double lo = *std::min_element(tail.begin(), tail.end());
  require(eps > 0.0 && eps < lo, "lacunarity needs 0 < eps < min tail H");
  require(burn_in >= 0, "burn_in must be >= 0");

  LacunarityResult out;
  out.status = LacunarityStatus::Vacuous;
  out.ratio = (hi - eps) * (1.0 - lo + eps) / ((lo - eps) * (1.0 - hi + eps));
  const double level = hi - eps;
  // Odd-numbered times look for H_j >= level, even-numbered for H_j < level.
  bool want_high = true;
  for (std::size_t j = 0; j < hurst.size(); ++j) {
    const bool high = hurst[j] >= level;
    if (high == want_high) {
      out.times.push_back(j);
      want_high = !want_high;
    }
  }
  // times[2k] = T_(2k+1), times[2k+1] = T_(2k+2); k counted from 0 so the first pair is k = 0.
  bool any = false;
  for (std::size_t k = 0; 2 * k + 1 < out.times.size(); ++k) {
    if (static_cast<int>(k) < burn_in) continue;
    any = true;
    const double t_odd = static_cast<double>(out.times[2 * k]);
    const double t_even = static_cast<double>(out.times[2 * k + 1]);
    if (!(t_even > out.ratio * t_odd)) {
      out.status = LacunarityStatus::FailsAtK;
      out.witness_k = static_cast<int>(k);
      return out;
    }
  }
  if (any) out.status = LacunarityStatus::HoldsForTail;
  return out;
}

// ------------------------------------------------------------------ FieldSpec

FieldSpec::FieldSpec(FieldVariant v, int domain_dim, int range_dim) : v_(std::move(v)), n_(domain_dim), d_(range_dim) {
  require(n_ >= 1 && n_ <= 3, "domain dimension must be 1, 2 or 3");
  require(d_ >= 1, "range dimension must be >= 1");
  if (const auto* f = std::get_if<Fbm>(&v_)) {
    require(f->alpha > 0.0 && f->alpha < 1.0, "fbm needs 0 < alpha < 1");
  } else if (const auto* rb = std::get_if<RieszBessel>(&v_)) {
    require(n_ <= 2, "riesz-bessel fields are implemented for N = 1, 2");
    require(rb->beta + rb->gamma - 0.5 * n_ > 0.0, "riesz-bessel needs beta + gamma - N/2 > 0");
    require(rb->gamma > 0.0 && rb->gamma < 1.0 + 0.5 * n_, "riesz-bessel needs 0 < gamma < 1 + N/2");
    norm_ = 1.0 / riesz_bessel_raw(rb->gamma, rb->beta, n_, 1.0);
  } else {
    const auto& is = std::get<InfinityScale>(v_);
    require(n_ == 1, "infinity-scale fields are implemented for N = 1");
    validate_hurst(is.hurst, is.tail_start);
    require(is.j_max >= 0, "j_max must be >= 0");
  }
}

FieldSpec FieldSpec::fbm(double alpha, int domain_dim, int range_dim) {
  return FieldSpec(Fbm{alpha}, domain_dim, range_dim);
}

FieldSpec FieldSpec::riesz_bessel(double gamma, double beta, int domain_dim, int range_dim) {
  return FieldSpec(RieszBessel{gamma, beta}, domain_dim, range_dim);
}

FieldSpec FieldSpec::infinity_scale(std::vector<double> hurst, int j_max, std::size_t tail_start, int range_dim) {
  return FieldSpec(InfinityScale{std::move(hurst), j_max, tail_start}, 1, range_dim);
}

std::string FieldSpec::kind_name() const {
  switch (v_.index()) {
    case 0: return "fbm";
    case 1: return "riesz-bessel";
    default: return "infinity-scale";
  }
}

double FieldSpec::variogram(double h) const {
  h = std::abs(h);
  if (h == 0.0) return 0.0;
  if (const auto* f = std::get_if<Fbm>(&v_)) return std::pow(h, 2.0 * f->alpha);
  if (const auto* rb = std::get_if<RieszBessel>(&v_)) return norm_ * riesz_bessel_raw(rb->gamma, rb->beta, n_, h);
  const auto& is = std::get<InfinityScale>(v_);
  return infinity_scale_raw(is.hurst, is.j_max, h);
}

double FieldSpec::variance(std::span<const double> x) const {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return variogram(std::sqrt(r2));
}

double FieldSpec::covariance(std::span<const double> x, std::span<const double> y) const {
  require(x.size() == y.size() && x.size() == static_cast<std::size_t>(n_), "point dimension mismatch");
  if (const auto* f = std::get_if<Fbm>(&v_)) return fbm_covariance(x, y, f->alpha);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  return 0.5 * (variance(x) + variance(y) - variogram(std::sqrt(d2)));
}

double FieldSpec::riesz_bessel_index() const {
  const auto* rb = std::get_if<RieszBessel>(&v_);
  if (!rb) throw InvalidArgument("not a riesz-bessel spec");
  return rb->gamma + rb->beta - 0.5 * n_;
}

PsiModel FieldSpec::psi() const {
  if (const auto* f = std::get_if<Fbm>(&v_)) return PsiModel(PowerLaw{f->alpha});
  if (std::holds_alternative<RieszBessel>(v_)) {
    const double H = riesz_bessel_index();
    if (H >= 1.0) throw Unsupported("riesz-bessel index >= 1: the field is smooth and has no power-law psi");
    return PsiModel(PowerLaw{H});
  }
  const auto& is = std::get<InfinityScale>(v_);
  return PsiModel(DyadicPiecewise{is.hurst, is.tail_start});
}

double FieldSpec::spectral_density(double radius) const {
  require(radius > 0.0, "spectral density needs a positive radius");
  if (const auto* rb = std::get_if<RieszBessel>(&v_))
    return norm_ * std::pow(radius, -2.0 * rb->gamma) * std::pow(1.0 + radius * radius, -rb->beta);
  if (const auto* is = std::get_if<InfinityScale>(&v_)) {
    int j = radius < 1.0 ? 0 : static_cast<int>(std::floor(std::log2(radius))) + 1;
    if (j > is->j_max) return 0.0;
    const double H = is->hurst[std::min<std::size_t>(static_cast<std::size_t>(j), is->hurst.size() - 1)];
    return std::pow(radius, -2.0 * H - n_);
  }
  throw Unsupported("fbm is sampled without a spectral representation");
}

double fbm_covariance(std::span<const double> x, std::span<const double> y, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "fbm needs 0 < alpha < 1");
  require(x.size() == y.size(), "point dimension mismatch");
  double nx = 0.0, ny = 0.0, nd = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    nx += x[i] * x[i];
    ny += y[i] * y[i];
    nd += (x[i] - y[i]) * (x[i] - y[i]);
  }
  return 0.5 * (std::pow(nx, alpha) + std::pow(ny, alpha) - std::pow(nd, alpha));
}

double fbm_covariance(double x, double y, double alpha) {
  return fbm_covariance(std::span<const double>(&x, 1), std::span<const double>(&y, 1), alpha);
}

// ----------------------------------------------------------------------- Grid

Grid Grid::uniform(int dim, std::size_t cells, double lo, double hi) {
  require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
  require(cells >= 1 && hi > lo, "uniform grid needs cells >= 1 and hi > lo");
  Grid g;
  g.dim = dim;
  g.is_uniform = true;
  g.cells = cells;
  g.lo = lo;
  g.spacing = (hi - lo) / static_cast<double>(cells);
  const std::size_t per = cells + 1;
  std::size_t total = 1;
  for (int c = 0; c < dim; ++c) total *= per;
  g.points.resize(total * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    for (int c = 0; c < dim; ++c) {
      g.points[i * dim + c] = lo + static_cast<double>(rest % per) * g.spacing;
      rest /= per;
    }
  }
  return g;
}

Grid Grid::from_points(int dim, std::vector<double> points) {
  require(dim >= 1 && !points.empty() && points.size() % static_cast<std::size_t>(dim) == 0, "bad point list");
  Grid g;
  g.dim = dim;
  g.points = std::move(points);
  return g;
}

std::string to_string(SamplingMethod m) {
  switch (m) {
    case SamplingMethod::ExactCholesky: return "exact-cholesky";
    case SamplingMethod::Circulant1d: return "circulant-1d";
    default: return "spectral";
  }
}

SamplingMethod parse_sampling_method(const std::string& s) {
  if (s == "exact-cholesky" || s == "cholesky") return SamplingMethod::ExactCholesky;
  if (s == "circulant-1d" || s == "circulant") return SamplingMethod::Circulant1d;
  if (s == "spectral") return SamplingMethod::Spectral;
  throw InvalidArgument("unknown sampling method '" + s + "'");
}

// ---------------------------------------------------------------- diagnostics

std::vector<VariogramPoint> variogram(std::span<const FieldSample> samples, std::span<const double> lags) {
  require(samples.size() >= 2, "variogram needs at least two samples");
  const Grid& g = samples.front().grid;
  require(g.is_uniform, "variogram needs a uniform grid");
  for (const auto& s : samples)
    require(s.grid.is_uniform && s.grid.cells == g.cells && s.grid.dim == g.dim && s.grid.spacing == g.spacing,
            "samples must share one grid");
  const std::size_t per = g.per_axis();
  std::vector<VariogramPoint> out;
  for (double h : lags) {
    const double steps = h / g.spacing;
    const auto step = static_cast<std::size_t>(std::llround(steps));
    require(h > 0.0 && std::abs(steps - static_cast<double>(step)) <= 1e-9 * std::max(1.0, steps) && step >= 1 &&
                step < per,
            "lag " + std::to_string(h) + " is not a positive multiple of the grid spacing within the grid");
    std::vector<double> means;
    std::size_t pairs = 0;
    for (const auto& s : samples) {
      double acc = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (i % per + step >= per) continue;  // stay on the same row of the first axis
        const double diff = s.value(i + step, 0) - s.value(i, 0);
        acc += diff * diff;
        ++count;
      }
      means.push_back(acc / static_cast<double>(count));
      pairs += count;
    }
    double mean = 0.0;
    for (double v : means) mean += v;
    mean /= static_cast<double>(means.size());
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    var /= static_cast<double>(means.size() - 1);
    out.push_back({h, mean, std::sqrt(var / static_cast<double>(means.size())), pairs});
  }
  return out;
}

std::vector<ModulusPoint> modulus_of_continuity(const FieldSample& sample, std::span<const double> deltas, int coord) {
  const Grid& g = sample.grid;
  require(g.is_uniform && (g.dim == 1 || g.dim == 2), "modulus of continuity needs a uniform grid with N = 1 or 2");
  require(coord >= 0 && coord < sample.range_dim(), "coordinate out of range");
  const std::size_t per = g.per_axis();
  std::vector<ModulusPoint> out;
  for (double delta : deltas) {
    require(delta >= g.spacing * (1.0 - 1e-12), "delta below the grid spacing");
    const auto w = static_cast<std::size_t>(std::floor(delta / g.spacing + 1e-9));
    double omega = 0.0;
    if (g.dim == 1) {
      // Sliding max - min over windows of w + 1 consecutive nodes.
      std::deque<std::size_t> mx, mn;
      for (std::size_t i = 0; i < per; ++i) {
        const double v = sample.value(i, coord);
        while (!mx.empty() && sample.value(mx.back(), coord) <= v) mx.pop_back();
        while (!mn.empty() && sample.value(mn.back(), coord) >= v) mn.pop_back();
        mx.push_back(i);
        mn.push_back(i);
        while (mx.front() + w < i) mx.pop_front();
        while (mn.front() + w < i) mn.pop_front();
        omega = std::max(omega, sample.value(mx.front(), coord) - sample.value(mn.front(), coord));
      }
    } else {
      const double lim = delta / g.spacing + 1e-9;
      const auto W = static_cast<long>(w);
      for (long dy = 0; dy <= W; ++dy)
        for (long dx = -W; dx <= W; ++dx) {
          if (dy == 0 && dx <= 0) continue;
          if (static_cast<double>(dx * dx + dy * dy) > lim * lim) continue;
          for (std::size_t y = 0; y + static_cast<std::size_t>(dy) < per; ++y)
            for (std::size_t x = 0; x < per; ++x) {
              const long x2 = static_cast<long>(x) + dx;
              if (x2 < 0 || x2 >= static_cast<long>(per)) continue;
              const double a = sample.value(y * per + x, coord);
              const double b = sample.value((y + static_cast<std::size_t>(dy)) * per + static_cast<std::size_t>(x2), coord);
              omega = std::max(omega, std::abs(a - b));
            }
        }
    }
    out.push_back({delta, omega});
  }
  return out;
}

}  // namespace qdim
