#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "detail.hpp"
#include "qdim/error.hpp"
#include "qdim/tree.hpp"
#include "tree_internal.hpp"

namespace qdim {

using detail::require;

namespace detail {

std::string encode(const JoinNode& node) {
  if (node.label >= 0) return "#" + std::to_string(node.label);
  std::vector<std::string> parts;
  for (const auto& c : node.children) parts.push_back(encode(c));
  std::sort(parts.begin(), parts.end());
  std::string s(1, node.saturated ? '[' : '(');
  s += std::to_string(node.level) + ":";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += ',';
    s += parts[i];
  }
  s += node.saturated ? ']' : ')';
  return s;
}

namespace {

void collect(const JoinNode& node, std::vector<int>& levels, bool& saturated) {
  if (node.label >= 0) return;
  saturated = saturated || node.saturated;
  levels.insert(levels.end(), node.children.size() - 1, node.level);
  for (const auto& c : node.children) collect(c, levels, saturated);
}

}  // namespace

OrbitSignature signature_of(const JoinNode& root, int leaf_count) {
  OrbitSignature s;
  s.canonical = encode(root);
  s.leaf_count = leaf_count;
  s.top_level = root.label >= 0 ? -1 : root.level;
  collect(root, s.levels, s.saturated);
  std::sort(s.levels.begin(), s.levels.end());
  return s;
}

}  // namespace detail

namespace {

using detail::JoinNode;

JoinNode build(std::span<const Word> words, std::vector<int> group, int level, bool allow_equal) {
  JoinNode node;
  if (group.size() == 1) {
    node.label = group.front();
    return node;
  }
  const int K = words.front().length();
  auto sym = [&](int i) { return words[static_cast<std::size_t>(i)].symbols[static_cast<std::size_t>(level)]; };
  while (level < K && std::all_of(group.begin(), group.end(), [&](int i) { return sym(i) == sym(group.front()); }))
    ++level;
  node.level = level;
  if (level == K) {
    if (!allow_equal) throw InvalidArgument("tuple contains coinciding words");
    node.saturated = true;
    for (int i : group) node.children.push_back(JoinNode{K, i, false, {}});
    return node;
  }
  std::map<std::uint16_t, std::vector<int>> parts;
  for (int i : group) parts[sym(i)].push_back(i);
  for (auto& [s, sub] : parts) node.children.push_back(build(words, std::move(sub), level + 1, allow_equal));
  return node;
}

std::uint64_t checked_tuple_count(std::uint64_t span, int n) {
  std::uint64_t total = 0;
  if (!detail::pow_fits(span, n, kTupleGuard, &total))
    throw GuardExceeded("tuple enumeration exceeds " + std::to_string(kTupleGuard) + " tuples");
  return total;
}

// Decode tuple index t into n leaf indices below `first` (each in [first, first + span)).
void decode(std::uint64_t t, std::uint64_t first, std::uint64_t span, int M, int K, std::vector<Word>& out) {
  for (auto& w : out) {
    w = Word::from_index(M, K, first + t % span);
    t /= span;
  }
}

}  // namespace

OrbitSignature orbit_signature(std::span<const Word> tuple, bool allow_equal) {
  require(!tuple.empty(), "empty tuple");
  for (const auto& w : tuple)
    require(w.M == tuple.front().M && w.length() == tuple.front().length(), "tuple words must share M and length");
  std::vector<int> all(tuple.size());
  std::iota(all.begin(), all.end(), 0);
  return detail::signature_of(build(tuple, all, 0, allow_equal), static_cast<int>(tuple.size()));
}

OrbitEnumeration enumerate_orbits(int M, int K, int n, bool include_saturated) {
  require(M >= 2 && K >= 0 && n >= 1, "enumeration needs M >= 2, K >= 0, n >= 1");
  const auto L = detail::ipow(static_cast<std::uint64_t>(M), K);
  const auto total = checked_tuple_count(L, n);
  std::map<std::string, OrbitClass> classes;
  OrbitEnumeration out;
  std::vector<Word> tuple(static_cast<std::size_t>(n));
  for (std::uint64_t t = 0; t < total; ++t) {
    decode(t, 0, L, M, K, tuple);
    auto sig = orbit_signature(tuple, true);
    if (sig.saturated) {
      ++out.saturated_tuples;
      if (!include_saturated) continue;
    }
    auto [it, fresh] = classes.try_emplace(sig.canonical, OrbitClass{sig, 0});
    ++it->second.tuples;
  }
  for (auto& [key, cls] : classes) out.orbits.push_back(std::move(cls));
  return out;
}

// ------------------------------------------------------------------- OrbitTable

OrbitTable::OrbitTable(int M, int K, int n, bool include_saturated)
    : M_(M), K_(K), n_(n), include_saturated_(include_saturated) {
  require(M >= 2 && K >= 0 && K < 255 && n >= 1, "orbit table needs M >= 2, 0 <= K < 255, n >= 1");
  const auto L = detail::ipow(static_cast<std::uint64_t>(M), K);
  const auto total = checked_tuple_count(L, n);
  std::map<std::string, std::uint32_t> ids;
  std::vector<OrbitSignature> found;
  tuple_orbit_.resize(total);
  tuple_top_level_.resize(total);
  std::vector<Word> tuple(static_cast<std::size_t>(n));
  for (std::uint64_t t = 0; t < total; ++t) {
    decode(t, 0, L, M, K, tuple);
    auto sig = orbit_signature(tuple, true);
    tuple_top_level_[t] = static_cast<std::uint8_t>(sig.top_level < 0 ? K : sig.top_level);
    if (sig.saturated && !include_saturated) {
      tuple_orbit_[t] = std::numeric_limits<std::uint32_t>::max();
      continue;
    }
    auto [it, fresh] = ids.try_emplace(sig.canonical, static_cast<std::uint32_t>(found.size()));
    if (fresh) found.push_back(std::move(sig));
    tuple_orbit_[t] = it->second;
  }
  // Renumber so orbits are sorted by signature.
  std::vector<std::uint32_t> order(found.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return found[a] < found[b]; });
  std::vector<std::uint32_t> rank(found.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  for (auto& o : tuple_orbit_)
    if (o != std::numeric_limits<std::uint32_t>::max()) o = rank[o];
  for (auto i : order) orbits_.push_back(found[i]);
}

std::size_t OrbitTable::orbit_index(const OrbitSignature& s) const {
  auto it = std::lower_bound(orbits_.begin(), orbits_.end(), s);
  if (it == orbits_.end() || it->canonical != s.canonical)
    throw InvalidArgument("orbit " + s.canonical + " does not occur in this table");
  return static_cast<std::size_t>(it - orbits_.begin());
}

std::size_t OrbitTable::vertex_offset(int M, int level, std::uint64_t index) {
  const auto Ml = detail::ipow(static_cast<std::uint64_t>(M), level);
  return static_cast<std::size_t>((Ml - 1) / static_cast<std::uint64_t>(M - 1) + index);
}

std::vector<std::vector<double>> OrbitTable::orbit_masses(const TreeMeasure& tm) const {
  require(tm.branching() == M_ && tm.depth() == K_, "tree shape does not match the orbit table");
  const auto L = detail::ipow(static_cast<std::uint64_t>(M_), K_);
  const std::size_t vertices = vertex_offset(M_, K_ + 1, 0);
  std::vector<std::vector<double>> out(orbits_.size(), std::vector<double>(vertices, 0.0));
  std::vector<std::uint64_t> div(static_cast<std::size_t>(K_) + 1);
  for (int l = 0; l <= K_; ++l) div[static_cast<std::size_t>(l)] = detail::ipow(static_cast<std::uint64_t>(M_), K_ - l);
  const auto& leaves = tm.level(K_);
  for (std::uint64_t t = 0; t < tuple_orbit_.size(); ++t) {
    const auto o = tuple_orbit_[t];
    if (o == std::numeric_limits<std::uint32_t>::max()) continue;
    double p = 1.0;
    std::uint64_t rest = t;
    const std::uint64_t leaf0 = t % L;
    for (int r = 0; r < n_ && p > 0.0; ++r) {
      p *= leaves[rest % L];
      rest /= L;
    }
    if (p == 0.0) continue;
    auto& row = out[o];
    for (int l = 0; l <= tuple_top_level_[t]; ++l)
      row[vertex_offset(M_, l, leaf0 / div[static_cast<std::size_t>(l)])] += p;
  }
  return out;
}

// --------------------------------------------------------------- inequalities

namespace {

constexpr double kRelSlack = 1e-9;

InequalityCheck make_check(double lhs, double rhs) { return {lhs, rhs, lhs <= rhs * (1.0 + kRelSlack) + 1e-300}; }

// mu^m of m-tuples below u (|u| = level) whose orbit is `orbit`, for each u at that level.
std::vector<double> orbit_mass_by_vertex(const TreeMeasure& tm, int level, const OrbitSignature& orbit) {
  const int M = tm.branching(), K = tm.depth();
  const auto count = detail::ipow(static_cast<std::uint64_t>(M), level);
  const auto span = detail::ipow(static_cast<std::uint64_t>(M), K - level);
  const auto per = checked_tuple_count(span, orbit.leaf_count);
  require(per <= kTupleGuard / std::max<std::uint64_t>(count, 1), "tuple enumeration exceeds the guard");
  const auto& leaves = tm.level(K);
  std::vector<double> out(count, 0.0);
  std::vector<Word> tuple(static_cast<std::size_t>(orbit.leaf_count));
  for (std::uint64_t u = 0; u < count; ++u) {
    if (tm.level(level)[u] == 0.0) continue;
    for (std::uint64_t t = 0; t < per; ++t) {
      decode(t, u * span, span, M, K, tuple);
      double p = 1.0;
      for (const auto& w : tuple) p *= leaves[w.index()];
      if (p == 0.0) continue;
      if (orbit_signature(tuple, true).canonical == orbit.canonical) out[u] += p;
    }
  }
  return out;
}

}  // namespace

double integer_rhs(const TreeMeasure& tm, const Word& v, std::span<const int> levels, double q, int n) {
  require(n >= 1 && q > 1.0 && q >= n, "integer inequality needs q >= n >= 1 and q > 1");
  require(levels.size() == static_cast<std::size_t>(n - 1), "need n - 1 join levels");
  double rhs = std::pow(tm.mass(v), (q - n) / (q - 1.0));
  for (int l : levels) {
    require(l >= v.length() && l <= tm.depth(), "join level outside [|v|, K]");
    rhs *= std::pow(tm.level_moment(l, q, v), 1.0 / (q - 1.0));
  }
  return rhs;
}

double frac_rhs(const TreeMeasure& tm, std::span<const int> levels, double q, int n) {
  require(n >= 1 && q > 1.0 && n >= q - 1.0, "fractional inequality needs n >= q - 1 > 0");
  require(levels.size() == static_cast<std::size_t>(n), "need n aggregate levels");
  const Word root{tm.branching(), {}};
  double rhs = 1.0;
  for (int l : levels) {
    require(l >= 0 && l <= tm.depth(), "level outside [0, K]");
    rhs *= std::pow(tm.level_moment(l, q, root), 1.0 / n);
  }
  return rhs;
}

InequalityCheck verify_integer_inequality(const TreeMeasure& tm, const Word& v, const OrbitSignature& orbit, double q,
                                          int n) {
  require(orbit.leaf_count == n, "orbit size differs from n");
  require(v.M == tm.branching() && v.length() <= tm.depth(), "vertex does not belong to the tree");
  require(orbit.leaf_count == 1 || orbit.top_level >= v.length(), "orbit top lies above v");
  const double rhs = integer_rhs(tm, v, orbit.levels, q, n);
  const double lhs = orbit_mass_by_vertex(tm, v.length(), orbit)[v.index()];
  return make_check(lhs, rhs);
}

InequalityCheck verify_frac_inequality(const TreeMeasure& tm, std::span<const int> levels,
                                       std::span<const OrbitSignature> orbits, double q, int n) {
  require(!levels.empty() && levels.size() == orbits.size(), "need one orbit per level");
  std::vector<int> aggregate;
  int total = 0;
  for (std::size_t r = 0; r < levels.size(); ++r) {
    require(levels[r] >= 0 && levels[r] < tm.depth(), "levels must lie in [0, K)");
    require(r == 0 || levels[r] > levels[r - 1], "levels must be strictly increasing");
    require(orbits[r].leaf_count == 1 || orbits[r].top_level >= levels[r], "orbit top lies above its level");
    total += orbits[r].leaf_count;
    aggregate.push_back(levels[r]);
    aggregate.insert(aggregate.end(), orbits[r].levels.begin(), orbits[r].levels.end());
  }
  require(total == n, "orbit sizes must sum to n");
  const double rhs = frac_rhs(tm, aggregate, q, n);

  std::vector<std::vector<double>> A;
  for (std::size_t r = 0; r < levels.size(); ++r) A.push_back(orbit_mass_by_vertex(tm, levels[r], orbits[r]));
  const int M = tm.branching(), K = tm.depth();
  const auto& leaves = tm.level(K);
  double lhs = 0.0;
  for (std::uint64_t j = 0; j < leaves.size(); ++j) {
    if (leaves[j] == 0.0) continue;
    double p = leaves[j];
    for (std::size_t r = 0; r < levels.size(); ++r) {
      const auto u = j / detail::ipow(static_cast<std::uint64_t>(M), K - levels[r]);
      p *= std::pow(A[r][u], (q - 1.0) / n);
    }
    lhs += p;
  }
  return make_check(lhs, rhs);
}

// ------------------------------------------------------------ abstract orbits

namespace {

// Set partitions of `labels` into exactly b blocks (restricted growth strings).
void partitions(const std::vector<int>& labels, int b, std::size_t i, std::vector<std::vector<int>>& cur,
                std::vector<std::vector<std::vector<int>>>& out) {
  const std::size_t left = labels.size() - i;
  if (static_cast<std::size_t>(b) > cur.size() + left) return;
  if (i == labels.size()) {
    if (static_cast<int>(cur.size()) == b) out.push_back(cur);
    return;
  }
  for (std::size_t k = 0; k < cur.size(); ++k) {
    cur[k].push_back(labels[i]);
    partitions(labels, b, i + 1, cur, out);
    cur[k].pop_back();
  }
  if (static_cast<int>(cur.size()) < b) {
    cur.push_back({labels[i]});
    partitions(labels, b, i + 1, cur, out);
    cur.pop_back();
  }
}

// Distribute the multiset `values` (as value -> count) among blocks with fixed capacities.
void distribute(const std::vector<std::pair<int, int>>& values, std::size_t vi, int left_of_value, std::size_t block,
                std::vector<int>& capacity, std::vector<std::vector<int>>& cur, std::vector<std::vector<std::vector<int>>>& out) {
  if (vi == values.size()) {
    if (std::all_of(capacity.begin(), capacity.end(), [](int c) { return c == 0; })) out.push_back(cur);
    return;
  }
  if (left_of_value == 0) {
    const std::size_t next = vi + 1;
    distribute(values, next, next < values.size() ? values[next].second : 0, 0, capacity, cur, out);
    return;
  }
  if (block == capacity.size()) return;
  const int v = values[vi].first;
  for (int take = std::min(left_of_value, capacity[block]); take >= 0; --take) {
    capacity[block] -= take;
    cur[block].insert(cur[block].end(), static_cast<std::size_t>(take), v);
    distribute(values, vi, left_of_value - take, block + 1, capacity, cur, out);
    cur[block].resize(cur[block].size() - static_cast<std::size_t>(take));
    capacity[block] += take;
  }
}

std::vector<JoinNode> trees(const std::vector<int>& labels, std::vector<int> levels, int max_branching) {
  if (labels.size() == 1) {
    if (!levels.empty()) return {};
    JoinNode leaf;
    leaf.label = labels.front();
    return {leaf};
  }
  if (levels.size() + 1 != labels.size()) return {};
  std::sort(levels.begin(), levels.end());
  const int t = levels.front();
  const auto c = std::count(levels.begin(), levels.end(), t);
  const int b = static_cast<int>(c) + 1;
  if (max_branching > 0 && b > max_branching) return {};
  std::vector<int> rest(levels.begin() + c, levels.end());
  std::vector<std::pair<int, int>> values;
  for (int v : rest) {
    if (values.empty() || values.back().first != v) values.push_back({v, 0});
    ++values.back().second;
  }

  std::vector<std::vector<std::vector<int>>> parts;
  std::vector<std::vector<int>> cur;
  partitions(labels, b, 0, cur, parts);
  std::vector<JoinNode> out;
  for (const auto& blocks : parts) {
    std::vector<int> capacity;
    for (const auto& blk : blocks) capacity.push_back(static_cast<int>(blk.size()) - 1);
    std::vector<std::vector<std::vector<int>>> splits;
    std::vector<std::vector<int>> assign(blocks.size());
    distribute(values, 0, values.empty() ? 0 : values.front().second, 0, capacity, assign, splits);
    for (const auto& split : splits) {
      std::vector<std::vector<JoinNode>> options;
      bool empty = false;
      for (std::size_t i = 0; i < blocks.size() && !empty; ++i) {
        options.push_back(trees(blocks[i], split[i], max_branching));
        empty = options.back().empty();
      }
      if (empty) continue;
      std::vector<std::size_t> pick(blocks.size(), 0);
      while (true) {
        JoinNode node;
        node.level = t;
        for (std::size_t i = 0; i < blocks.size(); ++i) node.children.push_back(options[i][pick[i]]);
        out.push_back(std::move(node));
        std::size_t i = 0;
        while (i < pick.size() && ++pick[i] == options[i].size()) pick[i++] = 0;
        if (i == pick.size()) break;
      }
    }
  }
  return out;
}

using Memo = std::map<std::pair<int, std::vector<int>>, std::uint64_t>;

std::uint64_t orbit_count(int m, std::vector<int> levels, int max_branching, Memo& memo) {
  if (m == 1) return levels.empty() ? 1 : 0;
  std::sort(levels.begin(), levels.end());
  auto key = std::pair(m, levels);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  std::vector<int> labels(static_cast<std::size_t>(m));
  std::iota(labels.begin(), labels.end(), 0);
  const auto count = static_cast<std::uint64_t>(trees(labels, levels, max_branching).size());
  memo.emplace(std::move(key), count);
  return count;
}

// Assign the remaining levels (value -> count) to orbits r with l_r <= value.
std::uint64_t assign_rest(const std::vector<std::pair<int, int>>& values, std::size_t vi, int left, std::size_t r,
                          const std::vector<int>& tops, std::vector<std::vector<int>>& groups, int max_branching,
                          Memo& memo) {
  if (vi == values.size()) {
    std::uint64_t prod = 1;
    for (std::size_t i = 0; i < groups.size() && prod; ++i)
      prod *= orbit_count(static_cast<int>(groups[i].size()) + 1, groups[i], max_branching, memo);
    return prod;
  }
  if (left == 0) {
    const std::size_t next = vi + 1;
    return assign_rest(values, next, next < values.size() ? values[next].second : 0, 0, tops, groups, max_branching,
                       memo);
  }
  if (r == tops.size()) return 0;
  const int v = values[vi].first;
  std::uint64_t total = 0;
  const int max_take = tops[r] <= v ? left : 0;
  for (int take = 0; take <= max_take; ++take) {
    groups[r].insert(groups[r].end(), static_cast<std::size_t>(take), v);
    total += assign_rest(values, vi, left - take, r + 1, tops, groups, max_branching, memo);
    groups[r].resize(groups[r].size() - static_cast<std::size_t>(take));
  }
  return total;
}

std::uint64_t count_configs(std::vector<int> k, int max_branching, Memo& memo) {
  std::sort(k.begin(), k.end());
  std::vector<int> distinct = k;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  require(distinct.size() < 32, "too many distinct levels");
  std::uint64_t total = 0;
  for (std::uint32_t mask = 1; mask < (1u << distinct.size()); ++mask) {
    std::vector<int> tops, rest = k;
    for (std::size_t i = 0; i < distinct.size(); ++i)
      if (mask & (1u << i)) {
        tops.push_back(distinct[i]);
        rest.erase(std::find(rest.begin(), rest.end(), distinct[i]));
      }
    std::vector<std::pair<int, int>> values;
    for (int v : rest) {
      if (values.empty() || values.back().first != v) values.push_back({v, 0});
      ++values.back().second;
    }
    std::vector<std::vector<int>> groups(tops.size());
    total += assign_rest(values, 0, values.empty() ? 0 : values.front().second, 0, tops, groups, max_branching, memo);
  }
  return total;
}

}  // namespace

std::vector<OrbitSignature> abstract_orbits(int m, std::span<const int> levels, int max_branching) {
  require(m >= 1 && levels.size() + 1 == static_cast<std::size_t>(m), "need m - 1 levels for m leaves");
  for (int l : levels) require(l >= 0, "levels must be nonnegative");
  std::vector<int> labels(static_cast<std::size_t>(m));
  std::iota(labels.begin(), labels.end(), 0);
  std::set<std::string> seen;
  std::vector<OrbitSignature> out;
  for (const auto& t : trees(labels, {levels.begin(), levels.end()}, max_branching)) {
    auto sig = detail::signature_of(t, m);
    if (seen.insert(sig.canonical).second) out.push_back(std::move(sig));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t count_level_configs(std::span<const int> levels, int max_branching) {
  require(!levels.empty(), "need at least one level");
  for (int l : levels) require(l >= 0, "levels must be nonnegative");
  Memo memo;
  return count_configs({levels.begin(), levels.end()}, max_branching, memo);
}

double level_series_bound(int n, double lambda) {
  require(n >= 1 && lambda > 0.0 && lambda < 1.0, "series bound needs n >= 1 and 0 < lambda < 1");
  double sum = 0.0;
  for (int k = 0;; ++k) {
    const double term = std::pow(k + 1.0, n - 1) * std::pow(lambda, static_cast<double>(k) / n);
    sum += term;
    if (k > 10 && term < 1e-17 * sum) break;
  }
  double pref = std::pow(2.0, n);
  for (int i = 2; i <= n; ++i) pref *= i;
  return pref * sum;
}

double level_series_partial(int n, double lambda, int L) {
  require(n >= 1 && L >= 0 && lambda > 0.0, "series needs n >= 1, L >= 0, lambda > 0");
  Memo memo;
  std::vector<int> k(static_cast<std::size_t>(n), 0);
  double sum = 0.0;
  while (true) {
    const double s = std::accumulate(k.begin(), k.end(), 0.0);
    sum += static_cast<double>(count_configs(k, 0, memo)) * std::pow(lambda, s / n);
    // next nondecreasing tuple with entries <= L
    int i = n - 1;
    while (i >= 0 && k[static_cast<std::size_t>(i)] == L) --i;
    if (i < 0) break;
    const int v = k[static_cast<std::size_t>(i)] + 1;
    for (int j = i; j < n; ++j) k[static_cast<std::size_t>(j)] = v;
  }
  return sum;
}

}  // namespace qdim
