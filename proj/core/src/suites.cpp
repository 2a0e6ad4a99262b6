#include "qdim/suites.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>

#include "detail.hpp"
#include "json_reader.hpp"
#include "parallel.hpp"
#include "qdim/error.hpp"
#include "qdim/rng.hpp"
#include "qdim/tree.hpp"
#include "qdim/ultrametric.hpp"

namespace qdim {

using detail::Reader;
using detail::require;

bool SuiteReport::pass() const noexcept {
  return std::all_of(sections.begin(), sections.end(), [](const SuiteSection& s) { return s.violations == 0; });
}

const SuiteSection& SuiteReport::section(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return s;
  throw InvalidArgument("no section named " + name);
}

nlohmann::json to_json(const SuiteReport& r, bool include_timing) {
  nlohmann::json secs = nlohmann::json::array();
  for (const auto& s : r.sections) {
    nlohmann::json j{{"name", s.name},
                     {"checks", s.checks},
                     {"violations", s.violations},
                     {"holds_fraction", s.checks ? 1.0 - static_cast<double>(s.violations) / s.checks : 1.0},
                     {"worst", s.worst},
                     {"bound", s.bound}};
    if (!s.first_violation.is_null()) j["first_violation"] = s.first_violation;
    secs.push_back(std::move(j));
  }
  nlohmann::json out{{"suite", r.suite}, {"version", version()}, {"sections", secs}, {"pass", r.pass()}};
  if (include_timing) out["elapsed_seconds"] = r.elapsed_seconds;
  return out;
}

namespace {

// Adds a chunk's counts into the running section, keeping the earliest violation.
void merge(SuiteSection& into, const SuiteSection& part) {
  into.checks += part.checks;
  into.violations += part.violations;
  into.worst = std::max(into.worst, part.worst);
  if (into.first_violation.is_null() && !part.first_violation.is_null()) into.first_violation = part.first_violation;
}

void record(SuiteSection& s, bool ok, double stat, const std::function<nlohmann::json()>& describe) {
  ++s.checks;
  s.worst = std::max(s.worst, stat);
  if (!ok) {
    ++s.violations;
    if (s.first_violation.is_null()) s.first_violation = describe();
  }
}

constexpr std::size_t kChunks = 32;

std::vector<double> random_point(Rng& rng, int dim) {
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::vector<double> p(static_cast<std::size_t>(dim));
  for (auto& c : p) c = u(rng);
  return p;
}

// A point near `x`: offset of size 2^-U(2, 30) in each coordinate, reflected to stay in [0,1/2).
std::vector<double> nearby_point(Rng& rng, const std::vector<double>& x) {
  std::uniform_real_distribution<double> e(2.0, 30.0), sgn(-1.0, 1.0);
  std::vector<double> y = x;
  const double scale = std::exp2(-e(rng));
  for (auto& c : y) {
    double v = c + scale * sgn(rng);
    if (v < 0.0) v = -v;
    if (v >= 0.5) v = 0.5 - (v - 0.5) - 1e-12;
    c = std::clamp(v, 0.0, std::nextafter(0.5, 0.0));
  }
  return y;
}

std::vector<double> pair_partner(Rng& rng, const std::vector<double>& x, std::uint64_t i) {
  return i % 2 == 0 ? random_point(rng, static_cast<int>(x.size())) : nearby_point(rng, x);
}

nlohmann::json point_json(const std::vector<double>& p) { return p; }

}  // namespace

// ----------------------------------------------------------------- ultrametric

SuiteReport run_ultrametric_suite(const UltrametricSuiteOptions& o, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteReport rep;
  rep.suite = "ultrametric";
  SuiteSection lower{"lower_bound"}, exceptions{"exception_count"}, select{"select_translate"},
      ultra{"ultrametric_inequality"};
  exceptions.bound = 0.0;

  std::uint64_t stream = 0;
  for (int m : o.bases) {
    detail::require_even_base(m);
    const ExactLattice lattice(m);
    for (int N : o.dims) {
      const auto family = translation_family(m, N);
      const long bound = exception_bound(m, N);
      exceptions.bound = std::max(exceptions.bound, static_cast<double>(bound));
      std::vector<SuiteSection> lo(kChunks), ex(kChunks), ul(kChunks);
      const std::uint64_t base_stream = stream;
      stream += kChunks;
      detail::parallel_for(kChunks, threads, [&](std::size_t c) {
        Rng rng(derive_seed(o.seed, base_stream + c));
        const auto count = [&](std::uint64_t total) { return total / kChunks + (c < total % kChunks ? 1 : 0); };
        for (std::uint64_t i = 0, n = count(o.lower_pairs); i < n; ++i) {
          const auto x = random_point(rng, N), y = pair_partner(rng, x, i);
          const auto ex_ = snap_point(x, lattice), ey = snap_point(y, lattice);
          for (const auto& id : family) {
            const bool ok = lower_bound_check(ex_, ey, id, lattice);
            record(lo[c], ok, 0.0, [&] {
              return nlohmann::json{{"m", m}, {"x", point_json(x)}, {"y", point_json(y)}, {"j", id.j}};
            });
          }
        }
        for (std::uint64_t i = 0, n = count(o.exception_pairs); i < n; ++i) {
          const auto x = random_point(rng, N), y = pair_partner(rng, x, i);
          const auto ex_ = snap_point(x, lattice), ey = snap_point(y, lattice);
          if (ex_.num == ey.num) continue;
          const int k = exception_count(ex_, ey, N, lattice);
          record(ex[c], k <= bound, k, [&] {
            return nlohmann::json{{"m", m}, {"x", point_json(x)}, {"y", point_json(y)}, {"count", k}, {"bound", bound}};
          });
        }
        for (std::uint64_t i = 0, n = count(o.triples); i < n; ++i) {
          const auto x = random_point(rng, N), y = pair_partner(rng, x, i), z = pair_partner(rng, y, i + 1);
          const auto px = snap_point(x, lattice), py = snap_point(y, lattice), pz = snap_point(z, lattice);
          for (const auto& id : family) {
            const double xz = d_a(px, pz, id, lattice).value, xy = d_a(px, py, id, lattice).value,
                         yz = d_a(py, pz, id, lattice).value;
            record(ul[c], xz <= std::max(xy, yz), 0.0, [&] {
              return nlohmann::json{{"m", m}, {"x", point_json(x)}, {"y", point_json(y)}, {"z", point_json(z)}, {"j", id.j}};
            });
          }
        }
      });
      for (std::size_t c = 0; c < kChunks; ++c) {
        merge(lower, lo[c]);
        merge(exceptions, ex[c]);
        merge(ultra, ul[c]);
      }
    }
  }

  for (int n = 1; n <= o.max_points; ++n)
    for (int N : o.dims) {
      const int m = 2 * n * n * N + 2;
      const ExactLattice lattice(m);
      std::vector<SuiteSection> se(kChunks);
      const std::uint64_t base_stream = stream;
      stream += kChunks;
      detail::parallel_for(kChunks, threads, [&](std::size_t c) {
        Rng rng(derive_seed(o.seed, base_stream + c));
        const std::uint64_t total = o.translate_sets / kChunks + (c < o.translate_sets % kChunks ? 1 : 0);
        for (std::uint64_t i = 0; i < total; ++i) {
          std::vector<std::vector<double>> pts{random_point(rng, N)};
          while (static_cast<int>(pts.size()) < n)
            pts.push_back(i % 2 ? nearby_point(rng, pts[rng() % pts.size()]) : random_point(rng, N));
          std::vector<ExactPoint> ex_;
          for (const auto& p : pts) ex_.push_back(snap_point(p, lattice));
          bool distinct = true;
          for (std::size_t a = 0; a < ex_.size(); ++a)
            for (std::size_t b = a + 1; b < ex_.size(); ++b) distinct = distinct && ex_[a].num != ex_[b].num;
          if (!distinct) continue;
          bool ok = true;
          std::string why;
          try {
            const auto id = select_translate(pts, m);
            for (std::size_t a = 0; a < ex_.size() && ok; ++a)
              for (std::size_t b = a + 1; b < ex_.size() && ok; ++b)
                ok = lower_bound_check(ex_[a], ex_[b], id, lattice) && upper_bound_check(ex_[a], ex_[b], id, lattice);
            if (!ok) why = "returned translate violates a bound";
          } catch (const InternalContradiction& e) {
            ok = false;
            why = e.what();
          }
          record(se[c], ok, 0.0, [&] {
            return nlohmann::json{{"m", m}, {"points", pts}, {"reason", why}};
          });
        }
      });
      for (const auto& part : se) merge(select, part);
    }

  rep.sections = {lower, exceptions, select, ultra};
  rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ------------------------------------------------------------------------ tree

namespace {

// Random leaf masses of four shapes: flat Dirichlet, sparse, multiplicative cascade, near point mass.
TreeMeasure random_tree_measure(Rng& rng, int M, int K, int kind) {
  const auto count = detail::ipow(static_cast<std::uint64_t>(M), K);
  std::vector<double> w(count, 0.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::gamma_distribution<double> flat(1.0), spiky(0.1);
  switch (kind % 4) {
    case 0:
      for (auto& v : w) v = flat(rng);
      break;
    case 1:
      for (auto& v : w) v = u(rng) < 0.5 ? 0.0 : flat(rng);
      w[rng() % count] += 1e-3;
      break;
    case 2: {
      std::vector<double> cw(static_cast<std::size_t>(M));
      for (auto& v : cw) v = flat(rng);
      for (std::uint64_t i = 0; i < count; ++i) {
        double p = 1.0;
        for (std::uint64_t r = i, k = 0; k < static_cast<std::uint64_t>(K); ++k, r /= static_cast<std::uint64_t>(M))
          p *= cw[r % static_cast<std::uint64_t>(M)];
        w[i] = p;
      }
      break;
    }
    default:
      if (rng() % 2 == 0) {
        w[rng() % count] = 1.0;
      } else {
        for (auto& v : w) v = spiky(rng);
      }
  }
  double total = 0.0;
  for (double v : w) total += v;
  if (total <= 0.0) {
    w[0] = 1.0;
    total = 1.0;
  }
  for (auto& v : w) v /= total;
  return TreeMeasure::from_leaf_masses(M, K, std::move(w));
}

nlohmann::json tree_json(const TreeMeasure& tm) {
  return {{"M", tm.branching()}, {"K", tm.depth()}, {"leaves", tm.level(tm.depth())}};
}

struct FracConfig {
  std::vector<int> levels;
  std::vector<int> sizes;
  std::vector<std::size_t> orbits;  // index into the table of the matching size
};

void enumerate_frac_configs(int K, int n, const std::vector<OrbitTable>& tables, std::vector<FracConfig>& out) {
  // p levels l_1 < ... < l_p in [0, K), sizes summing to n, one admissible orbit per level.
  std::function<void(FracConfig&, int, int)> rec = [&](FracConfig& cur, int next_level, int left) {
    if (left == 0) {
      if (!cur.levels.empty()) out.push_back(cur);
      return;
    }
    for (int l = next_level; l < K; ++l)
      for (int m = 1; m <= left; ++m) {
        const auto& orbits = tables[static_cast<std::size_t>(m)].orbits();
        for (std::size_t o = 0; o < orbits.size(); ++o) {
          if (orbits[o].leaf_count > 1 && orbits[o].top_level < l) continue;
          cur.levels.push_back(l);
          cur.sizes.push_back(m);
          cur.orbits.push_back(o);
          rec(cur, l + 1, left - m);
          cur.levels.pop_back();
          cur.sizes.pop_back();
          cur.orbits.pop_back();
        }
      }
  };
  FracConfig cur;
  rec(cur, 0, n);
}

}  // namespace

SuiteReport run_tree_suite(const TreeSuiteOptions& o, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  require(o.branching >= 2 && o.max_depth >= 1 && o.measures >= 1, "tree suite needs M >= 2, depth >= 1, measures >= 1");
  SuiteReport rep;
  rep.suite = "tree";
  SuiteSection partition{"orbit_partition"}, integer{"integer_inequality"}, frac{"frac_inequality"},
      counts{"level_configs"}, series{"level_series"};
  partition.bound = 1.0;
  integer.bound = 1.0;
  frac.bound = 1.0;
  const int M = o.branching;
  const int max_n = *std::max_element(o.ns.begin(), o.ns.end());

  for (int K = 1; K <= o.max_depth; ++K) {
    std::vector<OrbitTable> tables;
    tables.emplace_back(M, K, 1);  // placeholder for index 0
    for (int m = 1; m <= max_n; ++m) tables.emplace_back(M, K, m);

    std::vector<std::vector<FracConfig>> frac_configs(static_cast<std::size_t>(max_n) + 1);
    for (int n : o.ns) enumerate_frac_configs(K, n, tables, frac_configs[static_cast<std::size_t>(n)]);

    std::vector<std::array<SuiteSection, 3>> parts(static_cast<std::size_t>(o.measures));
    detail::parallel_for(parts.size(), threads, [&](std::size_t i) {
      Rng rng(derive_seed(o.seed, static_cast<std::uint64_t>(K) * 1'000'003u + i));
      const TreeMeasure tm = random_tree_measure(rng, M, K, static_cast<int>(i));
      auto& [pa, in, fr] = parts[i];
      std::vector<std::vector<std::vector<double>>> masses(tables.size());
      for (int m = 1; m <= max_n; ++m) masses[static_cast<std::size_t>(m)] = tables[static_cast<std::size_t>(m)].orbit_masses(tm);

      for (int n : o.ns) {
        const auto& table = tables[static_cast<std::size_t>(n)];
        const auto& mass = masses[static_cast<std::size_t>(n)];
        double total = 0.0;
        for (const auto& row : mass) total += row[0];
        record(pa, std::abs(total - 1.0) <= 1e-12, std::abs(total - 1.0), [&] {
          return nlohmann::json{{"n", n}, {"total", total}, {"tree", tree_json(tm)}};
        });

        for (double q : o.qs) {
          if (q >= n) {
            for (std::size_t oi = 0; oi < table.orbits().size(); ++oi) {
              const auto& orb = table.orbits()[oi];
              const int top = orb.leaf_count == 1 ? K : orb.top_level;
              for (int l = 0; l <= top; ++l)
                for (std::uint64_t idx = 0; idx < detail::ipow(static_cast<std::uint64_t>(M), l); ++idx) {
                  const Word v = Word::from_index(M, l, idx);
                  const double lhs = mass[oi][OrbitTable::vertex_offset(M, l, idx)];
                  const double rhs = integer_rhs(tm, v, orb.levels, q, n);
                  const bool ok = lhs <= rhs * (1.0 + 1e-9) + 1e-300;
                  record(in, ok, rhs > 0.0 ? lhs / rhs : 0.0, [&] {
                    return nlohmann::json{{"q", q}, {"n", n}, {"v", v.to_string()}, {"orbit", orb.canonical},
                                          {"lhs", lhs}, {"rhs", rhs}, {"tree", tree_json(tm)}};
                  });
                }
            }
          }
          if (q >= n && q < n + 1) {
            const auto& leaves = tm.level(K);
            for (const auto& cfg : frac_configs[static_cast<std::size_t>(n)]) {
              std::vector<int> aggregate;
              for (std::size_t r = 0; r < cfg.levels.size(); ++r) {
                aggregate.push_back(cfg.levels[r]);
                const auto& lv = tables[static_cast<std::size_t>(cfg.sizes[r])].orbits()[cfg.orbits[r]].levels;
                aggregate.insert(aggregate.end(), lv.begin(), lv.end());
              }
              const double rhs = frac_rhs(tm, aggregate, q, n);
              double lhs = 0.0;
              for (std::uint64_t j = 0; j < leaves.size(); ++j) {
                if (leaves[j] == 0.0) continue;
                double p = leaves[j];
                for (std::size_t r = 0; r < cfg.levels.size(); ++r) {
                  const auto u = j / detail::ipow(static_cast<std::uint64_t>(M), K - cfg.levels[r]);
                  p *= std::pow(masses[static_cast<std::size_t>(cfg.sizes[r])][cfg.orbits[r]]
                                      [OrbitTable::vertex_offset(M, cfg.levels[r], u)],
                                (q - 1.0) / n);
                }
                lhs += p;
              }
              const bool ok = lhs <= rhs * (1.0 + 1e-9) + 1e-300;
              record(fr, ok, rhs > 0.0 ? lhs / rhs : 0.0, [&] {
                nlohmann::json orbits = nlohmann::json::array();
                for (std::size_t r = 0; r < cfg.levels.size(); ++r)
                  orbits.push_back(tables[static_cast<std::size_t>(cfg.sizes[r])].orbits()[cfg.orbits[r]].canonical);
                return nlohmann::json{{"q", q}, {"n", n}, {"levels", cfg.levels}, {"orbits", orbits},
                                      {"lhs", lhs}, {"rhs", rhs}, {"tree", tree_json(tm)}};
              });
            }
          }
        }
      }
    });
    for (const auto& [pa, in, fr] : parts) {
      merge(partition, pa);
      merge(integer, in);
      merge(frac, fr);
    }
  }

  // Level configurations: every multiset with entries <= count_max_level, n <= count_max_n.
  for (int n = 1; n <= o.count_max_n; ++n) {
    double cap = std::pow(2.0, n);
    for (int i = 2; i <= n; ++i) cap *= i;
    counts.bound = std::max(counts.bound, cap);
    std::vector<int> k(static_cast<std::size_t>(n), 0);
    while (true) {
      const auto c = count_level_configs(k);
      record(counts, static_cast<double>(c) <= cap, static_cast<double>(c), [&] {
        return nlohmann::json{{"levels", k}, {"count", c}, {"bound", cap}};
      });
      int i = n - 1;
      while (i >= 0 && k[static_cast<std::size_t>(i)] == o.count_max_level) --i;
      if (i < 0) break;
      const int v = k[static_cast<std::size_t>(i)] + 1;
      for (int j = i; j < n; ++j) k[static_cast<std::size_t>(j)] = v;
    }
  }

  for (int n = 1; n <= o.series_max_n; ++n) {
    const double bound = level_series_bound(n, o.series_lambda);
    for (int L = 0; L <= o.series_max_level; ++L) {
      const double partial = level_series_partial(n, o.series_lambda, L);
      record(series, partial <= bound, partial / bound, [&] {
        return nlohmann::json{{"n", n}, {"L", L}, {"partial", partial}, {"bound", bound}};
      });
    }
  }
  series.bound = 1.0;

  rep.sections = {partition, integer, frac, counts, series};
  rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// --------------------------------------------------------------------- parsing

UltrametricSuiteOptions parse_ultrametric_suite(const nlohmann::json& j) {
  Reader r(j, "");
  UltrametricSuiteOptions o;
  if (r.has("bases")) o.bases = r.integers("bases");
  if (r.has("dims")) o.dims = r.integers("dims");
  o.lower_pairs = r.unsigned_integer("lower_pairs", o.lower_pairs);
  o.exception_pairs = r.unsigned_integer("exception_pairs", o.exception_pairs);
  o.translate_sets = r.unsigned_integer("translate_sets", o.translate_sets);
  o.max_points = static_cast<int>(r.integer("max_points", o.max_points));
  o.triples = r.unsigned_integer("triples", o.triples);
  o.seed = r.unsigned_integer("seed", o.seed);
  r.reject_unknown();
  for (std::size_t i = 0; i < o.bases.size(); ++i)
    if (o.bases[i] < 2 || o.bases[i] % 2) throw ConfigError("/bases/" + std::to_string(i), "bases must be even and >= 2");
  for (std::size_t i = 0; i < o.dims.size(); ++i)
    if (o.dims[i] < 1 || o.dims[i] > 3) throw ConfigError("/dims/" + std::to_string(i), "dims must lie in 1..3");
  if (o.max_points < 1 || o.max_points > 4) throw ConfigError("/max_points", "must lie in 1..4");
  return o;
}

TreeSuiteOptions parse_tree_suite(const nlohmann::json& j) {
  Reader r(j, "");
  TreeSuiteOptions o;
  o.branching = static_cast<int>(r.integer("branching", o.branching));
  o.max_depth = static_cast<int>(r.integer("max_depth", o.max_depth));
  if (r.has("n")) o.ns = r.integers("n");
  if (r.has("q")) o.qs = r.numbers("q");
  o.measures = static_cast<int>(r.integer("measures_per_cell", o.measures));
  o.seed = r.unsigned_integer("seed", o.seed);
  o.count_max_level = static_cast<int>(r.integer("count_max_level", o.count_max_level));
  o.count_max_n = static_cast<int>(r.integer("count_max_n", o.count_max_n));
  if (r.has("series")) {
    Reader s(r.raw("series"), "/series");
    o.series_lambda = s.number("lambda", o.series_lambda);
    o.series_max_n = static_cast<int>(s.integer("max_n", o.series_max_n));
    o.series_max_level = static_cast<int>(s.integer("max_level", o.series_max_level));
    s.reject_unknown();
    if (!(o.series_lambda > 0.0 && o.series_lambda < 1.0)) throw ConfigError("/series/lambda", "must lie in (0,1)");
  }
  r.reject_unknown();
  if (o.branching < 2 || o.branching > 4) throw ConfigError("/branching", "must lie in 2..4");
  if (o.max_depth < 1 || o.max_depth > 6) throw ConfigError("/max_depth", "must lie in 1..6");
  if (o.ns.empty()) throw ConfigError("/n", "must not be empty");
  for (std::size_t i = 0; i < o.ns.size(); ++i)
    if (o.ns[i] < 1 || o.ns[i] > 4) throw ConfigError("/n/" + std::to_string(i), "n must lie in 1..4");
  for (std::size_t i = 0; i < o.qs.size(); ++i)
    if (!(o.qs[i] > 1.0)) throw ConfigError("/q/" + std::to_string(i), "q must exceed 1");
  if (o.measures < 1) throw ConfigError("/measures_per_cell", "must be >= 1");
  return o;
}

}  // namespace qdim
