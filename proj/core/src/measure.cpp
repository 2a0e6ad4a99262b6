#include "qdim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "detail.hpp"
#include "qdim/error.hpp"

namespace qdim {

using detail::ipow;
using detail::require;
using detail::u128;

namespace {

constexpr double kMassTol = 1e-12;
constexpr std::size_t kMaxDiscretizeAtoms = std::size_t{1} << 26;

std::uint32_t symbol_count(int m, int dim) { return static_cast<std::uint32_t>(ipow(m, dim)); }

// Per-coordinate cube index of every atom at level k, flattened, and the
// permutation that sorts atoms by index tuple.
struct Grouping {
  std::vector<std::uint64_t> keys;
  std::vector<std::size_t> order;
};

Grouping group_atoms(const Atoms& a, int level) {
  const auto dim = static_cast<std::size_t>(a.dim());
  Grouping g;
  g.keys.resize(a.size() * dim);
  const std::uint64_t div = level < a.depth() ? ipow(a.base(), a.depth() - level) : 1;
  const auto& num = a.all_numerators();
  for (std::size_t i = 0; i < g.keys.size(); ++i) g.keys[i] = num[i] / div;
  g.order.resize(a.size());
  std::iota(g.order.begin(), g.order.end(), std::size_t{0});
  if (dim == 1) {
    std::sort(g.order.begin(), g.order.end(),
              [&](std::size_t x, std::size_t y) { return g.keys[x] < g.keys[y]; });
  } else {
    std::sort(g.order.begin(), g.order.end(), [&](std::size_t x, std::size_t y) {
      return std::lexicographical_compare(g.keys.begin() + x * dim, g.keys.begin() + (x + 1) * dim,
                                          g.keys.begin() + y * dim, g.keys.begin() + (y + 1) * dim);
    });
  }
  return g;
}

template <class F>
void for_each_group(const Atoms& a, const Grouping& g, F&& f) {
  const auto dim = static_cast<std::size_t>(a.dim());
  std::size_t i = 0;
  while (i < g.order.size()) {
    double mass = 0.0;
    std::size_t j = i;
    const auto* key = g.keys.data() + g.order[i] * dim;
    while (j < g.order.size() && std::equal(key, key + dim, g.keys.data() + g.order[j] * dim)) {
      mass += a.mass(g.order[j]);
      ++j;
    }
    f(mass);
    i = j;
  }
}

void check_q(double q) { require(std::isfinite(q) && q > 1.0, "q must be > 1"); }

}  // namespace

// ---------------------------------------------------------------- CubeAddress

CubeAddress::CubeAddress(int m, int dim, std::vector<std::uint32_t> symbols)
    : m_(m), dim_(dim), symbols_(std::move(symbols)) {
  detail::require_even_base(m);
  require(dim >= 1, "cube dimension must be >= 1");
  const auto count = symbol_count(m, dim);
  for (auto s : symbols_) require(s < count, "cube symbol out of range");
  ipow(m, level());
}

CubeAddress CubeAddress::from_indices(int m, int level, std::span<const std::uint64_t> indices) {
  detail::require_even_base(m);
  require(level >= 0, "level must be >= 0");
  require(!indices.empty(), "need at least one coordinate index");
  const std::uint64_t side = ipow(m, level);
  for (auto i : indices) require(i < side, "cube index out of range for level");
  const int dim = static_cast<int>(indices.size());
  std::vector<std::uint32_t> symbols(static_cast<std::size_t>(level), 0);
  for (int c = 0; c < dim; ++c) {
    std::uint64_t idx = indices[static_cast<std::size_t>(c)];
    const auto weight = static_cast<std::uint32_t>(ipow(m, c));
    for (int k = level - 1; k >= 0; --k) {
      symbols[static_cast<std::size_t>(k)] += static_cast<std::uint32_t>(idx % m) * weight;
      idx /= m;
    }
  }
  return CubeAddress(m, dim, std::move(symbols));
}

int CubeAddress::digit(int k, int coord) const {
  require(k >= 0 && k < level() && coord >= 0 && coord < dim_, "digit position out of range");
  std::uint32_t s = symbols_[static_cast<std::size_t>(k)];
  for (int c = 0; c < coord; ++c) s /= static_cast<std::uint32_t>(m_);
  return static_cast<int>(s % static_cast<std::uint32_t>(m_));
}

std::vector<std::uint64_t> CubeAddress::indices() const {
  std::vector<std::uint64_t> out(static_cast<std::size_t>(dim_), 0);
  for (int c = 0; c < dim_; ++c)
    for (int k = 0; k < level(); ++k) out[static_cast<std::size_t>(c)] = out[static_cast<std::size_t>(c)] * m_ + digit(k, c);
  return out;
}

// ---------------------------------------------------------------------- Atoms

Atoms::Atoms(int m, int dim, int depth, std::vector<std::uint64_t> numerators, std::vector<double> masses)
    : m_(m), dim_(dim), depth_(depth), num_(std::move(numerators)), masses_(std::move(masses)) {
  detail::require_even_base(m);
  require(dim >= 1, "atom dimension must be >= 1");
  require(depth >= 0, "atom depth must be >= 0");
  require(detail::pow_fits(m, depth, std::uint64_t{1} << 62, &denom_),
          "atom depth too large: m^depth must not exceed 2^62");
  require(num_.size() == masses_.size() * static_cast<std::size_t>(dim), "coordinate/mass count mismatch");
  require(!masses_.empty(), "atom list is empty");
  for (auto x : num_) require(x < denom_, "atom coordinate outside [0,1)");
  long double total = 0.0L;  // extended accumulator: 2^20 terms would otherwise drift past the tolerance
  for (double w : masses_) {
    require(std::isfinite(w) && w >= 0.0, "atom masses must be finite and nonnegative");
    total += w;
  }
  require(std::abs(static_cast<double>(total) - 1.0) <= kMassTol,
          "atom masses must sum to 1, got " + std::to_string(static_cast<double>(total)));
}

int Atoms::default_depth(int m) {
  detail::require_even_base(m);
  return static_cast<int>(std::floor(52.0 / std::log2(static_cast<double>(m)) + 1e-12));
}

Atoms Atoms::from_points(int m, int dim, std::span<const double> points, std::vector<double> masses, int depth) {
  if (depth < 0) depth = default_depth(m);
  require(points.size() == masses.size() * static_cast<std::size_t>(dim), "point/mass count mismatch");
  std::uint64_t denom = 0;
  require(detail::pow_fits(m, depth, std::uint64_t{1} << 62, &denom), "atom depth too large");
  std::vector<std::uint64_t> num(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = points[i];
    require(std::isfinite(x) && x >= 0.0 && x < 1.0, "atom coordinate outside [0,1): " + std::to_string(x));
    long double scaled = static_cast<long double>(x) * static_cast<long double>(denom);
    auto v = static_cast<std::uint64_t>(std::llround(scaled));
    num[i] = std::min(v, denom - 1);
  }
  return Atoms(m, dim, depth, std::move(num), std::move(masses));
}

double Atoms::coordinate(std::size_t i, int c) const {
  return static_cast<double>(num_[i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(c)]) /
         static_cast<double>(denom_);
}

// --------------------------------------------------------------- MeasureModel

MeasureModel::MeasureModel(MeasureVariant v) : v_(std::move(v)), dim_(1), m_(2) {
  std::visit(
      [this](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Multinomial>) {
          detail::require_even_base(x.m);
          require(x.dim >= 1, "dimension must be >= 1");
          require(x.weights.size() == symbol_count(x.m, x.dim), "multinomial needs m^N weights");
          double total = 0.0;
          for (double w : x.weights) {
            require(std::isfinite(w) && w >= 0.0, "multinomial weights must be nonnegative");
            total += w;
          }
          require(std::abs(total - 1.0) <= kMassTol, "multinomial weights must sum to 1");
          dim_ = x.dim;
          m_ = x.m;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          detail::require_even_base(x.m);
          require(x.dim >= 1, "dimension must be >= 1");
          dim_ = x.dim;
          m_ = x.m;
        } else {
          require(x.size() > 0, "atom list is empty");
          dim_ = x.dim();
          m_ = x.base();
        }
      },
      v_);
}

MeasureModel MeasureModel::multinomial(int m, std::vector<double> weights, int dim) {
  return MeasureModel(Multinomial{m, dim, std::move(weights)});
}

MeasureModel MeasureModel::uniform(int dim, int m) { return MeasureModel(Uniform{m, dim}); }

MeasureModel MeasureModel::atoms(Atoms a) { return MeasureModel(std::move(a)); }

const Atoms& MeasureModel::as_atoms() const {
  if (const auto* a = std::get_if<Atoms>(&v_)) return *a;
  throw InvalidArgument("measure is " + kind_name() + ", atoms required");
}

std::string MeasureModel::kind_name() const {
  switch (v_.index()) {
    case 0: return "multinomial";
    case 1: return "atoms";
    default: return "uniform";
  }
}

// ----------------------------------------------------------------- operations

double cylinder_mass(const MeasureModel& model, const CubeAddress& cube) {
  require(cube.dim() == model.dim(), "cube dimension does not match the measure");
  return std::visit(
      [&](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Multinomial>) {
          if (cube.base() != x.m)
            throw InvalidArgument("cube base " + std::to_string(cube.base()) + " does not match multinomial base " +
                                  std::to_string(x.m));
          double p = 1.0;
          for (auto s : cube.symbols()) p *= x.weights[s];
          return p;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return std::pow(static_cast<double>(cube.base()), -static_cast<double>(cube.level()) * x.dim);
        } else {
          // x in [i/m^k, (i+1)/m^k)  <=>  i*D <= X*m^k < (i+1)*D with D the atom denominator.
          const auto idx = cube.indices();
          const u128 side = ipow(cube.base(), cube.level());
          const u128 den = x.denominator();
          double total = 0.0;
          for (std::size_t i = 0; i < x.size(); ++i) {
            auto num = x.numerators(i);
            bool inside = true;
            for (std::size_t c = 0; c < num.size() && inside; ++c) {
              const u128 scaled = static_cast<u128>(num[c]) * side;
              inside = scaled >= static_cast<u128>(idx[c]) * den && scaled < static_cast<u128>(idx[c] + 1) * den;
            }
            if (inside) total += x.mass(i);
          }
          return total;
        }
      },
      model.variant());
}

double moment_sum(const MeasureModel& model, double q, int level) {
  check_q(q);
  require(level >= 0, "level must be >= 0");
  return std::visit(
      [&](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Multinomial>) {
          double s = 0.0;
          for (double w : x.weights)
            if (w > 0.0) s += std::pow(w, q);
          return std::pow(s, level);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return std::pow(static_cast<double>(x.m), -static_cast<double>(level) * x.dim * (q - 1.0));
        } else {
          double s = 0.0;
          for_each_group(x, group_atoms(x, level), [&](double w) {
            if (w > 0.0) s += std::pow(w, q);
          });
          return s;
        }
      },
      model.variant());
}

double correlation_integral(const MeasureModel& model, double q, double r) {
  check_q(q);
  require(std::isfinite(r) && r > 0.0, "radius must be > 0");
  if (!model.is_atoms())
    throw Unsupported("correlation_integral needs atoms; discretize the " + model.kind_name() + " measure first");
  const Atoms& a = model.as_atoms();
  const std::size_t n = a.size();
  const int dim = a.dim();
  double total = 0.0;

  if (dim == 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return a.numerators(x)[0] < a.numerators(y)[0];
    });
    std::vector<double> xs(n), prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = a.coordinate(order[i], 0);
      prefix[i + 1] = prefix[i] + a.mass(order[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double w = a.mass(order[i]);
      if (w <= 0.0) continue;
      auto lo = std::lower_bound(xs.begin(), xs.end(), xs[i] - r) - xs.begin();
      auto hi = std::upper_bound(xs.begin(), xs.end(), xs[i] + r) - xs.begin();
      total += w * std::pow(prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)], q - 1.0);
    }
    return total;
  }

  // Cell hashing with cell side r: neighbours lie in the 3^N surrounding cells.
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const noexcept {
      std::uint64_t h = 1469598103934665603ULL;
      for (auto v : k) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ULL;
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_map<std::vector<std::int64_t>, std::vector<std::size_t>, KeyHash> cells;
  std::vector<double> pts(n * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::int64_t> key(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c) {
      pts[i * dim + c] = a.coordinate(i, c);
      key[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(std::floor(pts[i * dim + c] / r));
    }
    cells[key].push_back(i);
  }
  const double r2 = r * r;
  int neighbours = 1;
  for (int c = 0; c < dim; ++c) neighbours *= 3;
  std::vector<std::int64_t> key(static_cast<std::size_t>(dim)), probe(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    const double w = a.mass(i);
    if (w <= 0.0) continue;
    for (int c = 0; c < dim; ++c) key[c] = static_cast<std::int64_t>(std::floor(pts[i * dim + c] / r));
    double ball = 0.0;
    for (int code = 0; code < neighbours; ++code) {
      int rest = code;
      for (int c = 0; c < dim; ++c) {
        probe[c] = key[c] + (rest % 3) - 1;
        rest /= 3;
      }
      auto it = cells.find(probe);
      if (it == cells.end()) continue;
      for (std::size_t j : it->second) {
        double d2 = 0.0;
        for (int c = 0; c < dim; ++c) {
          const double diff = pts[i * dim + c] - pts[j * dim + c];
          d2 += diff * diff;
        }
        if (d2 <= r2) ball += a.mass(j);
      }
    }
    total += w * std::pow(ball, q - 1.0);
  }
  return total;
}

MeasureModel discretize(const MeasureModel& model, int depth) {
  if (model.is_atoms()) return model;
  require(depth >= 1, "discretization depth must be >= 1");
  const int m = model.base();
  const int dim = model.dim();
  const std::uint32_t symbols = symbol_count(m, dim);
  std::vector<double> weights(symbols, 1.0 / symbols);
  if (const auto* mn = std::get_if<Multinomial>(&model.variant())) weights = mn->weights;

  std::vector<std::uint32_t> live;
  for (std::uint32_t s = 0; s < symbols; ++s)
    if (weights[s] > 0.0) live.push_back(s);
  const double count = std::pow(static_cast<double>(live.size()), depth);
  if (count > static_cast<double>(kMaxDiscretizeAtoms))
    throw GuardExceeded("discretization would create " + std::to_string(count) + " atoms");

  // Centres (2i+1)/(2 m^K) = (i*m + m/2) / m^(K+1) are exact at depth K+1.
  const std::size_t n = live.size() == 0 ? 0 : static_cast<std::size_t>(count);
  std::vector<std::uint64_t> num;
  std::vector<double> mass;
  num.reserve(n * static_cast<std::size_t>(dim));
  mass.reserve(n);
  std::vector<std::size_t> choice(static_cast<std::size_t>(depth), 0);
  std::vector<std::uint64_t> idx(static_cast<std::size_t>(dim));
  for (std::size_t a = 0; a < n; ++a) {
    double w = 1.0;
    std::fill(idx.begin(), idx.end(), 0);
    for (int k = 0; k < depth; ++k) {
      std::uint32_t s = live[choice[static_cast<std::size_t>(k)]];
      w *= weights[s];
      for (int c = 0; c < dim; ++c) {
        idx[c] = idx[c] * m + s % m;
        s /= m;
      }
    }
    for (int c = 0; c < dim; ++c) num.push_back(idx[c] * m + static_cast<std::uint64_t>(m / 2));
    mass.push_back(w);
    for (int k = depth - 1; k >= 0; --k) {
      if (++choice[static_cast<std::size_t>(k)] < live.size()) break;
      choice[static_cast<std::size_t>(k)] = 0;
    }
  }
  // Floating products can drift from 1 by a few ulps per level; renormalise within tolerance.
  const auto total = static_cast<double>(std::accumulate(mass.begin(), mass.end(), 0.0L));
  if (std::abs(total - 1.0) > kMassTol)
    for (double& w : mass) w /= total;
  return MeasureModel(Atoms(m, dim, depth + 1, std::move(num), std::move(mass)));
}

double analytic_dq(const MeasureModel& model, double q) {
  check_q(q);
  if (std::holds_alternative<Uniform>(model.variant())) return model.dim();
  const auto* mn = std::get_if<Multinomial>(&model.variant());
  if (!mn) throw Unsupported("analytic_dq is defined for multinomial and uniform measures, got " + model.kind_name());
  double s = 0.0;
  for (double w : mn->weights)
    if (w > 0.0) s += std::pow(w, q);
  return std::log(s) / ((q - 1.0) * std::log(1.0 / mn->m));
}

MomentCurve moment_curve(const MeasureModel& model, double q, int k_min, int k_max) {
  check_q(q);
  require(0 <= k_min && k_min <= k_max, "need 0 <= k_min <= k_max");
  MomentCurve curve{q, model.base(), CurveKind::MeshMoment, {}};
  for (int k = k_min; k <= k_max; ++k)
    curve.points.push_back({k, std::pow(static_cast<double>(model.base()), -k), moment_sum(model, q, k)});
  return curve;
}

MomentCurve correlation_curve(const MeasureModel& model, double q, std::span<const double> radii) {
  MomentCurve curve{q, model.base(), CurveKind::Correlation, {}};
  double prev = std::numeric_limits<double>::infinity();
  int k = 0;
  for (double r : radii) {
    require(r < prev, "radii must be strictly decreasing");
    prev = r;
    curve.points.push_back({k++, r, correlation_integral(model, q, r)});
  }
  return curve;
}

MeasureModel halve_support(const MeasureModel& model) {
  if (!model.is_atoms()) throw InvalidArgument("halve_support expects atoms; discretize first");
  const Atoms& a = model.as_atoms();
  // x/2 = X*(m/2) / m^(depth+1), exact for even m.
  std::vector<std::uint64_t> num(a.all_numerators());
  for (auto& x : num) x *= static_cast<std::uint64_t>(a.base() / 2);
  return MeasureModel(Atoms(a.base(), a.dim(), a.depth() + 1, std::move(num), a.masses()));
}

}  // namespace qdim
