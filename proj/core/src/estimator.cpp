#include "qdim/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "detail.hpp"

namespace qdim {

using detail::i128;
using detail::require;

namespace {

constexpr double kLatticeScale = 1099511627776.0;  // 2^40

std::int64_t to_lattice(double v) {
  require(std::isfinite(v) && std::abs(v) < 8388608.0, "image value outside the representable range");
  return static_cast<std::int64_t>(std::llround(v * kLatticeScale));
}

i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Merge equal lattice points, summing masses in input order.
ImageMeasure merge(int dim, std::vector<std::int64_t> lattice, std::vector<double> masses) {
  const auto D = static_cast<std::size_t>(dim);
  std::vector<std::size_t> order(masses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(lattice.begin() + a * D, lattice.begin() + (a + 1) * D,
                                        lattice.begin() + b * D, lattice.begin() + (b + 1) * D);
  });
  ImageMeasure im;
  im.dim = dim;
  for (std::size_t i = 0; i < order.size();) {
    const auto* key = lattice.data() + order[i] * D;
    double w = 0.0;
    std::size_t j = i;
    while (j < order.size() && std::equal(key, key + D, lattice.data() + order[j] * D)) w += masses[order[j++]];
    im.lattice.insert(im.lattice.end(), key, key + D);
    im.masses.push_back(w);
    i = j;
  }
  return im;
}

}  // namespace

double ImageMeasure::coordinate(std::size_t i, int c) const {
  return static_cast<double>(lattice[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)]) / kLatticeScale;
}

double ImageMeasure::total_mass() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }

ImageMeasure image_measure(const FieldSample& field, const MeasureModel& model, std::string measure_id,
                           std::string field_id) {
  const Atoms& a = model.as_atoms();
  const Grid& g = field.grid;
  require(a.dim() == g.dim, "measure dimension does not match the field domain");
  require(g.is_uniform, "image_measure needs a uniform field grid");
  const int d = field.range_dim();
  const std::size_t per = g.per_axis();
  std::vector<std::int64_t> lattice;
  std::vector<double> masses;
  lattice.reserve(a.size() * static_cast<std::size_t>(d));
  masses.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t node = 0, stride = 1;
    for (int c = 0; c < a.dim(); ++c) {
      const double x = a.coordinate(i, c);
      const double steps = (x - g.lo) / g.spacing;
      const double idx = std::round(steps);
      if (std::abs(steps - idx) > 0.5 + 1e-9 || idx < 0.0 || idx > static_cast<double>(g.cells))
        throw InvalidArgument("atom " + std::to_string(i) + " at coordinate " + std::to_string(x) +
                              " is off the field grid by more than half a cell");
      node += static_cast<std::size_t>(idx) * stride;
      stride *= per;
    }
    for (int c = 0; c < d; ++c) lattice.push_back(to_lattice(field.value(node, c)));
    masses.push_back(a.mass(i));
  }
  ImageMeasure im = merge(d, std::move(lattice), std::move(masses));
  im.measure_id = std::move(measure_id);
  im.field_id = std::move(field_id);
  return im;
}

ImageMeasure image_from_points(int dim, std::span<const double> points, std::span<const double> masses) {
  require(dim >= 1 && points.size() == masses.size() * static_cast<std::size_t>(dim), "point/mass count mismatch");
  std::vector<std::int64_t> lattice(points.size());
  std::transform(points.begin(), points.end(), lattice.begin(), to_lattice);
  return merge(dim, std::move(lattice), std::vector<double>(masses.begin(), masses.end()));
}

MomentCurve image_moment_curve(const ImageMeasure& im, double q, int k_min, int k_max, int m,
                               const std::optional<std::vector<double>>& origin) {
  require(q > 1.0, "q must be > 1");
  require(0 <= k_min && k_min <= k_max, "need 0 <= k_min <= k_max");
  require(m >= 2, "mesh base must be >= 2");
  require(im.size() > 0, "image measure is empty");
  const auto D = static_cast<std::size_t>(im.dim);
  std::vector<std::int64_t> o(D);
  if (origin) {
    require(origin->size() == D, "origin dimension mismatch");
    for (std::size_t c = 0; c < D; ++c)
      o[c] = static_cast<std::int64_t>(std::floor((*origin)[c] * kLatticeScale));
  } else {
    for (std::size_t c = 0; c < D; ++c) {
      o[c] = std::numeric_limits<std::int64_t>::max();
      for (std::size_t i = 0; i < im.size(); ++i) o[c] = std::min(o[c], im.lattice[i * D + c]);
    }
  }
  MomentCurve curve{q, m, CurveKind::MeshMoment, {}};
  std::vector<i128> keys(im.lattice.size());
  std::vector<std::size_t> order(im.size());
  const i128 unit = static_cast<i128>(1) << kImageLatticeBits;
  for (int k = k_min; k <= k_max; ++k) {
    const i128 mk = static_cast<i128>(detail::ipow(static_cast<std::uint64_t>(m), k));
    for (std::size_t i = 0; i < keys.size(); ++i)
      keys[i] = floor_div((static_cast<i128>(im.lattice[i]) - o[i % D]) * mk, unit);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(keys.begin() + a * D, keys.begin() + (a + 1) * D, keys.begin() + b * D,
                                          keys.begin() + (b + 1) * D);
    });
    double sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
      const auto* key = keys.data() + order[i] * D;
      double w = 0.0;
      std::size_t j = i;
      while (j < order.size() && std::equal(key, key + D, keys.data() + order[j] * D)) w += im.masses[order[j++]];
      if (w > 0.0) sum += std::pow(w, q);
      i = j;
    }
    curve.points.push_back({k, std::pow(static_cast<double>(m), -k), sum});
  }
  return curve;
}

std::string to_string(EstimateKind k) {
  switch (k) {
    case EstimateKind::Lower: return "lower";
    case EstimateKind::Upper: return "upper";
    default: return "single-fit";
  }
}

EstimateKind parse_estimate_kind(const std::string& s) {
  if (s == "lower") return EstimateKind::Lower;
  if (s == "upper") return EstimateKind::Upper;
  if (s == "single-fit") return EstimateKind::SingleFit;
  throw InvalidArgument("unknown estimate kind '" + s + "'");
}

double DimensionEstimate::proxy() const noexcept {
  switch (kind) {
    case EstimateKind::Lower: return window_min;
    case EstimateKind::Upper: return window_max;
    default: return slope;
  }
}

namespace {

struct Fit {
  double slope;
  double std_error;
};

Fit least_squares(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - my - b * (x[i] - mx);
    ssr += e * e;
  }
  const double se = x.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return {b, se};
}

}  // namespace

DimensionEstimate estimate_dq(const MomentCurve& curve, int k_min, int k_max, EstimateKind kind) {
  require(curve.q > 1.0, "q must be > 1");
  std::vector<double> x, y;
  for (const auto& p : curve.points) {
    if (p.k < k_min || p.k > k_max) continue;
    if (!(p.value > 0.0))
      throw InvalidArgument("moment value at k = " + std::to_string(p.k) +
                            " is zero; the scale is finer than the atom resolution");
    x.push_back((curve.q - 1.0) * std::log(p.r));
    y.push_back(std::log(p.value));
  }
  require(x.size() >= 4, "estimate_dq needs at least 4 curve points in the fit range");
  const Fit all = least_squares(x, y);
  DimensionEstimate e;
  e.q = curve.q;
  e.slope = all.slope;
  e.std_error = all.std_error;
  e.k_min = k_min;
  e.k_max = k_max;
  e.kind = kind;
  e.window_min = std::numeric_limits<double>::infinity();
  e.window_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 4 <= x.size(); ++i) {
    const double s = least_squares(std::span(x).subspan(i, 4), std::span(y).subspan(i, 4)).slope;
    e.window_min = std::min(e.window_min, s);
    e.window_max = std::max(e.window_max, s);
  }
  return e;
}

DimensionEstimate exact_estimate(double q, double value) {
  DimensionEstimate e;
  e.q = q;
  e.slope = e.window_min = e.window_max = value;
  return e;
}

HolderCheck holder_upper_check(const DimensionEstimate& image, const DimensionEstimate& source, double alpha, int d,
                               double tolerance) {
  require(image.q == source.q, "holder check needs estimates at the same q");
  require(alpha > 0.0 && d >= 1, "holder check needs alpha > 0 and d >= 1");
  const double bound = std::min(static_cast<double>(d), source.slope / alpha);
  const double margin = bound + tolerance - image.slope;
  return {bound, tolerance, image.slope, margin, margin >= 0.0};
}

}  // namespace qdim
