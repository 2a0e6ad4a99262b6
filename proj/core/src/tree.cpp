#include "qdim/tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "detail.hpp"
#include "qdim/error.hpp"

namespace qdim {

using detail::require;

// ----------------------------------------------------------------------- Word

Word Word::prefix(int k) const {
  require(k >= 0 && k <= length(), "prefix length out of range");
  return Word{M, std::vector<std::uint16_t>(symbols.begin(), symbols.begin() + k)};
}

bool Word::is_prefix_of(const Word& other) const noexcept {
  return M == other.M && length() <= other.length() && std::equal(symbols.begin(), symbols.end(), other.symbols.begin());
}

std::uint64_t Word::index() const {
  std::uint64_t i = 0;
  for (auto s : symbols) i = i * static_cast<std::uint64_t>(M) + s;
  return i;
}

Word Word::from_index(int M, int length, std::uint64_t index) {
  Word w{M, std::vector<std::uint16_t>(static_cast<std::size_t>(length))};
  for (int k = length - 1; k >= 0; --k) {
    w.symbols[static_cast<std::size_t>(k)] = static_cast<std::uint16_t>(index % static_cast<std::uint64_t>(M));
    index /= static_cast<std::uint64_t>(M);
  }
  return w;
}

std::string Word::to_string() const {
  if (symbols.empty()) return "()";
  std::string s;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(symbols[i]);
  }
  return s;
}

// -------------------------------------------------------------------- JoinSet

int JoinSet::total() const noexcept {
  int t = 0;
  for (const auto& v : vertices) t += v.multiplicity;
  return t;
}

std::vector<int> JoinSet::levels() const {
  std::vector<int> out;
  for (const auto& v : vertices) out.insert(out.end(), static_cast<std::size_t>(v.multiplicity), v.vertex.length());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void check_words(std::span<const Word> words) {
  require(!words.empty(), "need at least one word");
  for (const auto& w : words) {
    require(w.M == words.front().M && w.length() == words.front().length(), "words must share M and length");
    for (auto s : w.symbols) require(s < w.M, "word symbol out of range");
  }
}

void split(std::span<const Word> words, std::vector<std::size_t> group, int level, bool allow_equal, JoinSet& out) {
  if (group.size() < 2) return;
  const int K = words.front().length();
  while (level < K) {
    const auto s = words[group.front()].symbols[static_cast<std::size_t>(level)];
    if (!std::all_of(group.begin(), group.end(),
                     [&](std::size_t i) { return words[i].symbols[static_cast<std::size_t>(level)] == s; }))
      break;
    ++level;
  }
  if (level == K) {
    if (!allow_equal) throw InvalidArgument("coinciding words have no join above the word depth");
    out.vertices.push_back({words[group.front()], static_cast<int>(group.size()) - 1});
    return;
  }
  std::map<std::uint16_t, std::vector<std::size_t>> parts;
  for (auto i : group) parts[words[i].symbols[static_cast<std::size_t>(level)]].push_back(i);
  out.vertices.push_back({words[group.front()].prefix(level), static_cast<int>(parts.size()) - 1});
  for (auto& [sym, sub] : parts) split(words, std::move(sub), level + 1, allow_equal, out);
}

}  // namespace

JoinSet join_set(std::span<const Word> words, bool allow_equal) {
  check_words(words);
  require(words.size() >= 2, "a join set needs at least two words");
  JoinSet js;
  std::vector<std::size_t> all(words.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  split(words, all, 0, allow_equal, js);
  std::sort(js.vertices.begin(), js.vertices.end(), [](const JoinVertex& a, const JoinVertex& b) {
    return std::pair(a.vertex.length(), a.vertex) < std::pair(b.vertex.length(), b.vertex);
  });
  return js;
}

Word top_vertex(const JoinSet& js) {
  require(!js.vertices.empty(), "join set is empty");
  return js.vertices.front().vertex;
}

double multipotential_phi(std::span<const Word> words, const std::function<double(int)>& f, bool allow_equal) {
  double p = 1.0;
  for (int l : join_set(words, allow_equal).levels()) p *= f(l);
  return p;
}

Word ultrametric_word(const ExactPoint& x, const UltrametricId& id, const ExactLattice& lattice, int depth) {
  require(depth >= 0 && depth <= lattice.depth(), "word depth beyond the lattice depth");
  const auto M = detail::ipow(static_cast<std::uint64_t>(id.m), id.dim());
  require(M <= 65535, "m^N too large for word symbols");
  Word w{static_cast<int>(M), {}};
  for (int k = 1; k <= depth; ++k) {
    const auto cube = translated_cube(x, id, lattice, k);
    std::uint64_t s = 0, weight = 1;
    for (auto c : cube) {
      s += (c % static_cast<std::uint64_t>(id.m)) * weight;
      weight *= static_cast<std::uint64_t>(id.m);
    }
    w.symbols.push_back(static_cast<std::uint16_t>(s));
  }
  return w;
}

double phi_a(std::span<const std::vector<double>> points, const UltrametricId& id) {
  id.validate();
  require(points.size() >= 2, "phi_a needs at least two points");
  const ExactLattice lattice(id.m);
  std::vector<ExactPoint> pts;
  for (const auto& p : points) {
    require(p.size() == id.j.size(), "point/translate dimension mismatch");
    pts.push_back(snap_point(p, lattice));
  }
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b)
      if (d_a(pts[a], pts[b], id, lattice).saturated || pts[a].num == pts[b].num)
        throw InvalidArgument("points " + std::to_string(a) + " and " + std::to_string(b) +
                              " share cubes through the lattice depth");
  std::vector<Word> words;
  for (const auto& p : pts) words.push_back(ultrametric_word(p, id, lattice, lattice.depth()));
  return multipotential_phi(words, [&](int l) { return std::pow(static_cast<double>(id.m), l); });
}

// ---------------------------------------------------------------- TreeMeasure

TreeMeasure TreeMeasure::from_leaf_masses(int M, int K, std::vector<double> leaves) {
  require(M >= 2 && K >= 0, "tree needs M >= 2 and K >= 0");
  require(leaves.size() == detail::ipow(static_cast<std::uint64_t>(M), K), "need M^K leaf masses");
  double total = 0.0;
  for (double w : leaves) {
    require(std::isfinite(w) && w >= 0.0, "leaf masses must be nonnegative");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-12, "leaf masses must sum to 1");
  TreeMeasure tm;
  tm.M_ = M;
  tm.K_ = K;
  tm.levels_.resize(static_cast<std::size_t>(K) + 1);
  tm.levels_[static_cast<std::size_t>(K)] = std::move(leaves);
  for (int l = K - 1; l >= 0; --l) {
    const auto& below = tm.levels_[static_cast<std::size_t>(l) + 1];
    auto& here = tm.levels_[static_cast<std::size_t>(l)];
    here.assign(below.size() / static_cast<std::size_t>(M), 0.0);
    for (std::size_t i = 0; i < below.size(); ++i) here[i / static_cast<std::size_t>(M)] += below[i];
  }
  return tm;
}

TreeMeasure TreeMeasure::from_model(const MeasureModel& model, int K) {
  const int m = model.base(), N = model.dim();
  const auto M = static_cast<int>(detail::ipow(static_cast<std::uint64_t>(m), N));
  const auto count = detail::ipow(static_cast<std::uint64_t>(M), K);
  require(count <= (std::uint64_t{1} << 26), "tree too large");
  std::vector<double> leaves(count, 0.0);
  if (const auto* mn = std::get_if<Multinomial>(&model.variant())) {
    leaves[0] = 1.0;
    for (int l = 1; l <= K; ++l) {
      const std::uint64_t width = detail::ipow(static_cast<std::uint64_t>(M), l);
      for (std::uint64_t i = width; i-- > 0;) leaves[i] = leaves[i / static_cast<std::uint64_t>(M)] * mn->weights[i % M];
    }
  } else if (std::holds_alternative<Uniform>(model.variant())) {
    std::fill(leaves.begin(), leaves.end(), 1.0 / static_cast<double>(count));
  } else {
    for (std::uint64_t i = 0; i < count; ++i) {
      const Word w = Word::from_index(M, K, i);
      leaves[i] = cylinder_mass(model, CubeAddress(m, N, std::vector<std::uint32_t>(w.symbols.begin(), w.symbols.end())));
    }
  }
  const double total = std::accumulate(leaves.begin(), leaves.end(), 0.0);
  for (double& w : leaves) w /= total;
  return from_leaf_masses(M, K, std::move(leaves));
}

double TreeMeasure::mass(const Word& v) const {
  require(v.M == M_ && v.length() <= K_, "word does not belong to this tree");
  return levels_[static_cast<std::size_t>(v.length())][v.index()];
}

double TreeMeasure::level_moment(int l, double q, const Word& v) const {
  require(l >= v.length() && l <= K_, "level must lie between |v| and the depth");
  const auto span = detail::ipow(static_cast<std::uint64_t>(M_), l - v.length());
  const auto first = v.index() * span;
  double s = 0.0;
  for (std::uint64_t i = first; i < first + span; ++i) {
    const double w = levels_[static_cast<std::size_t>(l)][i];
    if (w > 0.0) s += std::pow(w, q);
  }
  return s;
}

// ------------------------------------------------------------------ partial J

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binom(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

}  // namespace

PartialJ partial_J(const TreeMeasure& tm, const std::function<double(int)>& f, double q, int n) {
  require(n >= 1, "n must be >= 1");
  require(q > 1.0 && q >= n && q <= n + 1, "partial_J needs q > 1 and n <= q <= n + 1");
  const int M = tm.branching(), K = tm.depth();
  std::vector<double> fl(static_cast<std::size_t>(K) + 1);
  for (int l = 0; l <= K; ++l) {
    fl[static_cast<std::size_t>(l)] = f(l);
    require(std::isfinite(fl[static_cast<std::size_t>(l)]) && fl[static_cast<std::size_t>(l)] >= 0.0,
            "f must be finite and nonnegative");
  }
  const auto stride = static_cast<std::size_t>(n) + 1;

  // G[l][u*stride + c]: integral of phi over ordered c-tuples inside C_u (c >= 1).
  std::vector<std::vector<double>> G(static_cast<std::size_t>(K) + 1);
  {
    const auto& leaves = tm.level(K);
    auto& g = G[static_cast<std::size_t>(K)];
    g.assign(leaves.size() * stride, 0.0);
    for (std::size_t u = 0; u < leaves.size(); ++u)
      for (int c = 1; c <= n; ++c) g[u * stride + c] = std::pow(leaves[u], c) * std::pow(fl[static_cast<std::size_t>(K)], c - 1);
  }
  // Q[b][c] = [y^b t^c] prod_children (1 + y Ghat_x(t)); Ghat_x(t) = sum_c G_x(c) t^c / c!.
  std::vector<double> Q(stride * stride), Qn(stride * stride);
  for (int l = K - 1; l >= 0; --l) {
    const auto& child = G[static_cast<std::size_t>(l) + 1];
    auto& g = G[static_cast<std::size_t>(l)];
    const std::size_t count = tm.level(l).size();
    g.assign(count * stride, 0.0);
    for (std::size_t u = 0; u < count; ++u) {
      std::fill(Q.begin(), Q.end(), 0.0);
      Q[0] = 1.0;
      for (int s = 0; s < M; ++s) {
        const double* gx = child.data() + (u * M + static_cast<std::size_t>(s)) * stride;
        Qn = Q;
        for (std::size_t b = 0; b < stride - 1; ++b)
          for (std::size_t c = 0; c < stride; ++c) {
            if (Q[b * stride + c] == 0.0) continue;
            for (std::size_t e = 1; c + e < stride; ++e)
              Qn[(b + 1) * stride + c + e] += Q[b * stride + c] * gx[e] / factorial(static_cast<int>(e));
          }
        Q.swap(Qn);
      }
      for (int c = 1; c <= n; ++c) {
        double acc = 0.0;
        for (int b = 1; b <= c; ++b) acc += std::pow(fl[static_cast<std::size_t>(l)], b - 1) * Q[b * stride + c];
        g[u * stride + c] = factorial(c) * acc;
      }
    }
  }

  // Walk from each leaf j to the root carrying H(c): integral over c-tuples joined with j.
  const auto& leaves = tm.level(K);
  double J = 0.0;
  std::vector<double> H(stride), Hn(stride), E(stride), En(stride);
  for (std::size_t j = 0; j < leaves.size(); ++j) {
    const double mu = leaves[j];
    if (mu <= 0.0) continue;
    for (int c = 0; c <= n; ++c) H[c] = std::pow(mu, c) * std::pow(fl[static_cast<std::size_t>(K)], c);
    std::size_t w = j;
    for (int l = K - 1; l >= 0; --l) {
      const std::size_t u = w / static_cast<std::size_t>(M);
      const auto& child = G[static_cast<std::size_t>(l) + 1];
      const double fv = fl[static_cast<std::size_t>(l)];
      std::fill(E.begin(), E.end(), 0.0);
      E[0] = 1.0;
      for (int s = 0; s < M; ++s) {
        const std::size_t x = u * M + static_cast<std::size_t>(s);
        if (x == w) continue;
        En = E;
        for (std::size_t c = 0; c < stride; ++c)
          for (std::size_t e = 1; c + e < stride; ++e) En[c + e] += E[c] * fv * child[x * stride + e] / factorial(static_cast<int>(e));
        E.swap(En);
      }
      for (int c = 0; c <= n; ++c) {
        double acc = 0.0;
        for (int cp = 0; cp <= c; ++cp) acc += binom(c, cp) * H[cp] * E[c - cp] * factorial(c - cp);
        Hn[c] = acc;
      }
      H.swap(Hn);
      w = u;
    }
    J += mu * std::pow(H[n], (q - 1.0) / n);
  }

  PartialJ out{J, {}};
  const Word root{M, {}};
  for (int l = 1; l <= K; ++l)
    out.log_condition.push_back(
        std::log(std::pow(fl[static_cast<std::size_t>(l)], q - 1.0) * tm.level_moment(l, q, root)) / l);
  return out;
}

}  // namespace qdim
