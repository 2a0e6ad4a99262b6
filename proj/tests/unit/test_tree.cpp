#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <tuple>
#include <map>
#include <set>
#include <vector>

#include "qdim/error.hpp"
#include "qdim/rng.hpp"
#include "qdim/tree.hpp"
#include "qdim/ultrametric.hpp"

using namespace qdim;

namespace {

Word word(int M, std::initializer_list<int> s) {
  Word w{M, {}};
  for (int v : s) w.symbols.push_back(static_cast<std::uint16_t>(v));
  return w;
}

int lcp(const Word& a, const Word& b) {
  int k = 0;
  while (k < a.length() && a.symbols[static_cast<std::size_t>(k)] == b.symbols[static_cast<std::size_t>(k)]) ++k;
  return k;
}

// Join levels of a word multiset are the common-prefix lengths of lexicographic neighbours.
std::vector<int> lcp_levels(std::vector<Word> words) {
  std::sort(words.begin(), words.end());
  std::vector<int> out;
  for (std::size_t i = 1; i < words.size(); ++i) out.push_back(lcp(words[i - 1], words[i]));
  std::sort(out.begin(), out.end());
  return out;
}

// Ordered tuples share an orbit exactly when their pairwise common-prefix matrices agree.
std::vector<int> lcp_matrix(const std::vector<Word>& t) {
  std::vector<int> out;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) out.push_back(lcp(t[i], t[j]));
  return out;
}

std::vector<Word> tuple_at(int M, int K, int n, std::uint64_t t) {
  std::vector<Word> out;
  const auto leaves = static_cast<std::uint64_t>(std::pow(M, K));
  for (int r = 0; r < n; ++r) {
    out.push_back(Word::from_index(M, K, t % leaves));
    t /= leaves;
  }
  return out;
}

std::uint64_t tuple_count(int M, int K, int n) { return static_cast<std::uint64_t>(std::pow(std::pow(M, K), n)); }

// Leaf masses from one of several shapes: flat, sparse or a single heavy leaf.
std::vector<double> random_leaves(Rng& rng, int M, int K) {
  const auto count = static_cast<std::size_t>(std::pow(M, K));
  std::vector<double> w(count);
  std::gamma_distribution<double> g(0.5);
  const int shape = static_cast<int>(rng() % 3);
  for (auto& v : w) {
    v = g(rng);
    if (shape == 1 && rng() % 3) v = 0.0;
  }
  if (shape == 2) w[rng() % count] += 20.0;
  double total = 0.0;
  for (double v : w) total += v;
  if (total == 0.0) w[0] = total = 1.0;
  for (auto& v : w) v /= total;
  return w;
}

struct Group {
  std::vector<Word> representative;
  std::vector<std::vector<Word>> tuples;
};

std::vector<Group> lcp_groups(int M, int K, int n) {
  std::map<std::vector<int>, Group> groups;
  for (std::uint64_t t = 0; t < tuple_count(M, K, n); ++t) {
    auto tuple = tuple_at(M, K, n, t);
    auto& g = groups[lcp_matrix(tuple)];
    if (g.tuples.empty()) g.representative = tuple;
    g.tuples.push_back(std::move(tuple));
  }
  std::vector<Group> out;
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

double leaf_mass(const std::vector<double>& leaves, const Word& w) { return leaves[w.index()]; }

// mu^n of the tuples of a group whose words all lie below u.
double group_mass_below(const Group& g, const std::vector<double>& leaves, const Word& u) {
  double s = 0.0;
  for (const auto& t : g.tuples) {
    if (!std::all_of(t.begin(), t.end(), [&](const Word& w) { return u.is_prefix_of(w); })) continue;
    double p = 1.0;
    for (const auto& w : t) p *= leaf_mass(leaves, w);
    s += p;
  }
  return s;
}

double level_moment_oracle(const std::vector<double>& leaves, int M, int K, int l, double q, const Word& v) {
  std::map<std::uint64_t, double> cubes;
  for (std::uint64_t i = 0; i < leaves.size(); ++i) {
    const Word w = Word::from_index(M, K, i);
    if (v.is_prefix_of(w)) cubes[w.prefix(l).index()] += leaves[i];
  }
  double s = 0.0;
  for (const auto& [u, m] : cubes)
    if (m > 0) s += std::pow(m, q);
  return s;
}

int top_level_of(const std::vector<Word>& t) {
  if (t.size() == 1) return t.front().length();
  int top = t.front().length();
  for (std::size_t i = 1; i < t.size(); ++i) top = std::min(top, lcp(t[0], t[i]));
  return top;
}

}  // namespace

// ----------------------------------------------------------------- join sets

TEST(JoinSet, SharedPrefixOfLengthThree) {
  const std::vector<Word> w{word(2, {0, 1, 1, 0, 1}), word(2, {0, 1, 1, 1, 0})};
  const auto js = join_set(w);
  ASSERT_EQ(js.vertices.size(), 1u);
  EXPECT_EQ(js.vertices[0].vertex, word(2, {0, 1, 1}));
  EXPECT_EQ(js.vertices[0].multiplicity, 1);
  EXPECT_EQ(top_vertex(js), word(2, {0, 1, 1}));
}

TEST(JoinSet, RootSplitHasMultiplicityNMinusOne) {
  const std::vector<Word> w{word(4, {0, 2}), word(4, {1, 2}), word(4, {2, 0}), word(4, {3, 3})};
  const auto js = join_set(w);
  ASSERT_EQ(js.vertices.size(), 1u);
  EXPECT_EQ(js.vertices[0].vertex.length(), 0);
  EXPECT_EQ(js.vertices[0].multiplicity, 3);
  EXPECT_EQ(top_vertex(js).length(), 0);
}

TEST(JoinSet, EightLeafFigure) {
  const std::vector<Word> w{word(3, {0, 0, 0}), word(3, {0, 0, 1}), word(3, {0, 1, 0}), word(3, {0, 2, 0}),
                            word(3, {1, 0, 0}), word(3, {1, 0, 1}), word(3, {1, 1, 0}), word(3, {2, 0, 0})};
  const auto js = join_set(w);
  EXPECT_EQ(js.total(), 7);
  int doubles = 0;
  for (const auto& v : js.vertices) doubles += v.multiplicity == 2;
  EXPECT_EQ(doubles, 2);
  EXPECT_EQ(js.levels(), (std::vector<int>{0, 0, 1, 1, 1, 2, 2}));
}

TEST(JoinSet, DuplicatesRejectedUnlessAllowed) {
  const std::vector<Word> w{word(2, {0, 1}), word(2, {0, 1}), word(2, {1, 1})};
  EXPECT_THROW(join_set(w), InvalidArgument);
  EXPECT_EQ(join_set(w, true).levels(), (std::vector<int>{0, 2}));
}

TEST(JoinSet, LevelsMatchSortedPrefixOracleExhaustively) {
  // Every tuple of distinct words for M = 2, 3 at depth <= 3 and n <= 5; the root cases go to K = 4.
  for (int M : {2, 3})
    for (int K = 1; K <= 3; ++K)
      for (int n = 2; n <= 4; ++n) {
        if (tuple_count(M, K, n) > 600000) continue;
        for (std::uint64_t t = 0; t < tuple_count(M, K, n); ++t) {
          const auto tuple = tuple_at(M, K, n, t);
          const auto js = join_set(tuple, true);
          ASSERT_EQ(js.total(), n - 1);
          ASSERT_EQ(js.levels(), lcp_levels(tuple));
        }
      }
}

TEST(JoinSet, RandomLargeTuples) {
  Rng rng(derive_seed(40, 0));
  for (int trial = 0; trial < 3000; ++trial) {
    const int M = 2 + static_cast<int>(rng() % 3), K = 1 + static_cast<int>(rng() % 4), n = 2 + static_cast<int>(rng() % 4);
    std::vector<Word> t;
    for (int r = 0; r < n; ++r) t.push_back(Word::from_index(M, K, rng() % static_cast<std::uint64_t>(std::pow(M, K))));
    const auto js = join_set(t, true);
    EXPECT_EQ(js.total(), n - 1);
    EXPECT_EQ(js.levels(), lcp_levels(t));
    const Word top = top_vertex(js);
    for (const auto& w : t) EXPECT_TRUE(top.is_prefix_of(w));
    EXPECT_EQ(top.length(), top_level_of(t));
  }
}

TEST(Word, IndexRoundTrip) {
  for (std::uint64_t i = 0; i < 81; ++i) EXPECT_EQ(Word::from_index(3, 4, i).index(), i);
  EXPECT_EQ(word(3, {2, 0, 1}).index(), 19u);
  EXPECT_EQ(word(2, {}).to_string(), "()");
}

// ------------------------------------------------------------------- kernels

TEST(MultipotentialPhi, Examples) {
  const std::vector<Word> pair{word(2, {0, 1, 1, 0}), word(2, {0, 1, 1, 1})};
  EXPECT_DOUBLE_EQ(multipotential_phi(pair, [](int) { return 1.0; }), 1.0);
  EXPECT_DOUBLE_EQ(multipotential_phi(pair, [](int l) { return std::ldexp(1.0, l); }), 8.0);
  const std::vector<Word> root{word(3, {0}), word(3, {1}), word(3, {2})};
  EXPECT_DOUBLE_EQ(multipotential_phi(root, [](int l) { return std::pow(3.0, 0.4 * l); }), 1.0);
}

TEST(PhiA, TwoPointExamples) {
  const UltrametricId id{2, {0}};
  const std::vector<std::vector<double>> pts{{0.1}, {0.2}};
  EXPECT_DOUBLE_EQ(phi_a(pts, id), 4.0);
  // Two points of one level-k binary interval that split at level k + 1: 2^k.
  for (int k = 1; k < 8; ++k) {
    const double base = 3.0 * std::ldexp(1.0, -k - 2);
    const std::vector<std::vector<double>> p{{base - std::ldexp(1.0, -k - 3)}, {base + std::ldexp(1.0, -k - 3)}};
    EXPECT_DOUBLE_EQ(phi_a(p, id), std::ldexp(1.0, k + 1)) << k;
  }
  const std::vector<std::vector<double>> same{{0.1}, {0.1}};
  EXPECT_THROW(phi_a(same, id), InvalidArgument);
}

TEST(PhiA, EqualsSingleLinkageMergeProduct) {
  // Oracle: in an ultrametric the join levels are the edge lengths of a minimum spanning tree.
  Rng rng(derive_seed(41, 0));
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 2 * (1 + static_cast<int>(rng() % 3)), dim = 1 + static_cast<int>(rng() % 2);
    const int n = 2 + static_cast<int>(rng() % 3);
    const auto family = translation_family(m, dim);
    const auto& id = family[rng() % family.size()];
    std::vector<std::vector<double>> pts(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(dim)));
    for (auto& p : pts)
      for (auto& v : p) v = u(rng);
    std::vector<bool> in(pts.size(), false);
    std::vector<double> best(pts.size(), 2.0);
    best[0] = 0.0;
    double product = 1.0;
    for (std::size_t step = 0; step < pts.size(); ++step) {
      std::size_t pick = 0;
      double low = 3.0;
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (!in[i] && best[i] < low) low = best[i], pick = i;
      in[pick] = true;
      if (step) product *= 1.0 / low;
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (!in[i]) best[i] = std::min(best[i], d_a(pts[pick], pts[i], id).value);
    }
    EXPECT_NEAR(phi_a(pts, id) / product, 1.0, 1e-12) << "trial " << trial;
  }
}

// -------------------------------------------------------------------- orbits

TEST(Orbits, PairsHaveOneOrbitPerLevel) {
  for (int M : {2, 3})
    for (int K : {2, 3, 4}) {
      const auto e = enumerate_orbits(M, K, 2);
      ASSERT_EQ(e.orbits.size(), static_cast<std::size_t>(K));
      std::set<int> levels;
      for (const auto& o : e.orbits) {
        ASSERT_EQ(o.signature.levels.size(), 1u);
        levels.insert(o.signature.levels[0]);
        // Ordered pairs splitting at level l: M^l prefixes, M(M-1) child pairs, M^(2(K-l-1)) completions.
        const int l = o.signature.levels[0];
        EXPECT_EQ(o.tuples, static_cast<std::uint64_t>(std::pow(M, l) * M * (M - 1) * std::pow(M, 2 * (K - l - 1))));
      }
      EXPECT_EQ(*levels.begin(), 0);
      EXPECT_EQ(*levels.rbegin(), K - 1);
      EXPECT_EQ(e.saturated_tuples, static_cast<std::uint64_t>(std::pow(M, K)));
    }
}

TEST(Orbits, SingleLeafIsOneOrbit) {
  const auto e = enumerate_orbits(3, 2, 1);
  ASSERT_EQ(e.orbits.size(), 1u);
  EXPECT_EQ(e.orbits[0].tuples, 9u);
  EXPECT_EQ(e.orbits[0].signature.top_level, -1);
}

TEST(Orbits, PartitionMatchesPrefixMatrixOracle) {
  for (auto [M, K, n] : {std::tuple{2, 2, 3}, std::tuple{2, 3, 3}, std::tuple{3, 2, 3}, std::tuple{2, 2, 4}, std::tuple{3, 2, 4}}) {
    const auto groups = lcp_groups(M, K, n);
    std::map<std::string, std::uint64_t> expected;
    std::uint64_t saturated = 0;
    for (const auto& g : groups) {
      const auto sig = orbit_signature(g.representative, true);
      for (const auto& t : g.tuples) ASSERT_EQ(orbit_signature(t, true), sig);
      EXPECT_EQ(expected.count(sig.canonical), 0u) << "two prefix matrices share " << sig.canonical;
      expected[sig.canonical] = g.tuples.size();
      if (sig.saturated) saturated += g.tuples.size();
    }
    const auto e = enumerate_orbits(M, K, n, true);
    ASSERT_EQ(e.orbits.size(), expected.size());
    for (const auto& o : e.orbits) EXPECT_EQ(o.tuples, expected.at(o.signature.canonical));
    EXPECT_EQ(e.saturated_tuples, saturated);
    const auto plain = enumerate_orbits(M, K, n);
    std::uint64_t total = plain.saturated_tuples;
    for (const auto& o : plain.orbits) total += o.tuples;
    EXPECT_EQ(total, tuple_count(M, K, n));
  }
}

TEST(Orbits, SignatureInvariantUnderAutomorphisms) {
  Rng rng(derive_seed(42, 0));
  for (int trial = 0; trial < 500; ++trial) {
    const int M = 2 + static_cast<int>(rng() % 3), K = 2 + static_cast<int>(rng() % 3), n = 2 + static_cast<int>(rng() % 3);
    std::vector<Word> t;
    for (int r = 0; r < n; ++r) t.push_back(Word::from_index(M, K, rng() % static_cast<std::uint64_t>(std::pow(M, K))));
    // A random automorphism: a symbol permutation chosen per visited prefix.
    std::map<Word, std::vector<std::uint16_t>> perms;
    auto image = t;
    for (std::size_t r = 0; r < t.size(); ++r)
      for (int k = 0; k < K; ++k) {
        auto& p = perms[t[r].prefix(k)];
        if (p.empty()) {
          for (int s = 0; s < M; ++s) p.push_back(static_cast<std::uint16_t>(s));
          std::shuffle(p.begin(), p.end(), rng);
        }
        image[r].symbols[static_cast<std::size_t>(k)] = p[t[r].symbols[static_cast<std::size_t>(k)]];
      }
    EXPECT_EQ(orbit_signature(t, true), orbit_signature(image, true));
  }
}

TEST(Orbits, GuardRejectsHugeEnumerations) { EXPECT_THROW(enumerate_orbits(4, 6, 3), GuardExceeded); }

TEST(AbstractOrbits, CountsMatchEnumeration) {
  // Enough branching (M = m) and depth to realise every level multiset with entries <= 2.
  for (int m : {2, 3}) {
    const auto e = enumerate_orbits(m, 3, m);
    std::map<std::vector<int>, std::size_t> by_levels;
    for (const auto& o : e.orbits) ++by_levels[o.signature.levels];
    for (const auto& [levels, count] : by_levels)
      EXPECT_EQ(abstract_orbits(m, levels).size(), count) << "m " << m;
  }
  EXPECT_EQ(abstract_orbits(3, std::vector<int>{1, 1}).size(), 1u);
  EXPECT_EQ(abstract_orbits(3, std::vector<int>{1, 2}).size(), 3u);
}

// ------------------------------------------------------------- inequalities

TEST(TreeMeasure, CylinderMassesAndModel) {
  const auto tm = TreeMeasure::from_model(MeasureModel::multinomial(2, {0.7, 0.3}), 3);
  EXPECT_NEAR(tm.mass(word(2, {0, 1})), 0.21, 1e-15);
  EXPECT_NEAR(tm.mass(word(2, {})), 1.0, 1e-15);
  EXPECT_NEAR(tm.level_moment(1, 2.0, word(2, {})), 0.58, 1e-15);
  EXPECT_THROW(TreeMeasure::from_leaf_masses(2, 1, {0.5, 0.4}), InvalidArgument);
}

TEST(IntegerInequality, MatchesBruteForceAndHolds) {
  Rng rng(derive_seed(43, 0));
  const int M = 2, K = 3;
  for (int n = 1; n <= 3; ++n) {
    const auto groups = lcp_groups(M, K, n);
    for (int trial = 0; trial < 12; ++trial) {
      const auto leaves = random_leaves(rng, M, K);
      const auto tm = TreeMeasure::from_leaf_masses(M, K, leaves);
      for (double q : {2.0, 2.5, 3.0, 3.5}) {
        if (q < n) continue;
        for (const auto& g : groups) {
          const auto sig = orbit_signature(g.representative, true);
          const int top = top_level_of(g.representative);
          for (int len = 0; len <= std::min(top, K); ++len)
            for (std::uint64_t vi = 0; vi < static_cast<std::uint64_t>(std::pow(M, len)); ++vi) {
              const Word v = Word::from_index(M, len, vi);
              const auto c = verify_integer_inequality(tm, v, sig, q, n);
              EXPECT_NEAR(c.lhs, group_mass_below(g, leaves, v), 1e-13);
              double vm = 0.0;
              for (std::uint64_t i = 0; i < leaves.size(); ++i)
                if (v.is_prefix_of(Word::from_index(M, K, i))) vm += leaves[i];
              double rhs = std::pow(vm, (q - n) / (q - 1));
              for (int l : sig.levels) rhs *= std::pow(level_moment_oracle(leaves, M, K, l, q, v), 1.0 / (q - 1));
              EXPECT_NEAR(c.rhs, rhs, 1e-12 * std::max(1.0, rhs));
              EXPECT_TRUE(c.holds) << sig.canonical << " q " << q << " lhs " << c.lhs << " rhs " << c.rhs;
            }
        }
      }
    }
  }
}

TEST(IntegerInequality, SingleLeafIsEquality) {
  Rng rng(derive_seed(44, 0));
  const auto tm = TreeMeasure::from_leaf_masses(2, 3, random_leaves(rng, 2, 3));
  const std::vector<Word> one{word(2, {0, 0, 0})};
  const auto sig = orbit_signature(one);
  for (std::uint64_t i = 0; i < 4; ++i) {
    const Word v = Word::from_index(2, 2, i);
    const auto c = verify_integer_inequality(tm, v, sig, 2.5, 1);
    EXPECT_NEAR(c.lhs, tm.mass(v), 1e-15);
    EXPECT_NEAR(c.rhs, tm.mass(v), 1e-15);
  }
}

TEST(IntegerInequality, PointMassSaturatedOrbitIsEquality) {
  std::vector<double> leaves(8, 0.0);
  leaves[5] = 1.0;
  const auto tm = TreeMeasure::from_leaf_masses(2, 3, leaves);
  const Word leaf = Word::from_index(2, 3, 5);
  const std::vector<Word> diag{leaf, leaf, leaf};
  const auto c = verify_integer_inequality(tm, word(2, {}), orbit_signature(diag, true), 3.0, 3);
  EXPECT_NEAR(c.lhs, 1.0, 1e-15);
  EXPECT_NEAR(c.rhs, 1.0, 1e-15);
  const std::vector<Word> split{word(2, {0, 0, 0}), word(2, {1, 0, 0})};
  const auto z = verify_integer_inequality(tm, word(2, {}), orbit_signature(split), 2.0, 2);
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_TRUE(z.holds);
}

TEST(OrbitTable, OrbitMassesSumToOne) {
  Rng rng(derive_seed(45, 0));
  for (int n = 1; n <= 3; ++n) {
    const OrbitTable table(2, 3, n);
    for (int trial = 0; trial < 10; ++trial) {
      const auto tm = TreeMeasure::from_leaf_masses(2, 3, random_leaves(rng, 2, 3));
      const auto masses = table.orbit_masses(tm);
      double total = 0.0;
      for (const auto& per_orbit : masses) total += per_orbit[0];
      EXPECT_NEAR(total, 1.0, 1e-13);
    }
  }
}

TEST(FracInequality, MatchesBruteForceAndHolds) {
  Rng rng(derive_seed(46, 0));
  const int M = 2, K = 3;
  std::map<int, std::vector<Group>> groups;
  for (int m = 1; m <= 3; ++m) groups[m] = lcp_groups(M, K, m);
  for (int trial = 0; trial < 300; ++trial) {
    const auto leaves = random_leaves(rng, M, K);
    const auto tm = TreeMeasure::from_leaf_masses(M, K, leaves);
    const int n = 1 + static_cast<int>(rng() % 3);
    const double q = n + 0.5 * static_cast<double>(rng() % 2) + (n == 1 ? 0.5 : 0.0);
    // Split n into p parts with increasing levels below K.
    std::vector<int> sizes;
    for (int left = n; left > 0;) {
      const int s = 1 + static_cast<int>(rng() % static_cast<unsigned>(left));
      sizes.push_back(s);
      left -= s;
    }
    if (static_cast<int>(sizes.size()) > K) continue;
    std::vector<int> levels;
    std::set<int> chosen;
    while (chosen.size() < sizes.size()) chosen.insert(static_cast<int>(rng() % K));
    levels.assign(chosen.begin(), chosen.end());
    std::vector<const Group*> picks;
    std::vector<OrbitSignature> sigs;
    bool ok = true;
    for (std::size_t r = 0; r < sizes.size(); ++r) {
      std::vector<const Group*> fit;
      for (const auto& g : groups[sizes[r]])
        if (sizes[r] == 1 || top_level_of(g.representative) >= levels[r]) fit.push_back(&g);
      if (fit.empty()) {
        ok = false;
        break;
      }
      picks.push_back(fit[rng() % fit.size()]);
      sigs.push_back(orbit_signature(picks.back()->representative, true));
    }
    if (!ok) continue;
    const auto c = verify_frac_inequality(tm, levels, sigs, q, n);
    double lhs = 0.0;
    std::vector<int> aggregate;
    for (std::size_t r = 0; r < sizes.size(); ++r) {
      aggregate.push_back(levels[r]);
      for (int l : sigs[r].levels) aggregate.push_back(l);
    }
    for (std::uint64_t j = 0; j < leaves.size(); ++j) {
      const Word wj = Word::from_index(M, K, j);
      double p = leaves[j];
      for (std::size_t r = 0; r < sizes.size(); ++r)
        p *= std::pow(group_mass_below(*picks[r], leaves, wj.prefix(levels[r])), (q - 1) / n);
      lhs += p;
    }
    double rhs = 1.0;
    for (int l : aggregate) rhs *= std::pow(level_moment_oracle(leaves, M, K, l, q, word(2, {})), 1.0 / n);
    EXPECT_NEAR(c.lhs, lhs, 1e-12);
    EXPECT_NEAR(c.rhs, rhs, 1e-12);
    EXPECT_TRUE(c.holds) << "trial " << trial;
  }
}

TEST(FracInequality, RejectsLevelAtDepth) {
  const auto tm = TreeMeasure::from_model(MeasureModel::uniform(1), 3);
  const std::vector<Word> one{word(2, {0, 0, 0})};
  const std::vector<OrbitSignature> sigs{orbit_signature(one)};
  const std::vector<int> levels{3};
  EXPECT_THROW(verify_frac_inequality(tm, levels, sigs, 1.5, 1), InvalidArgument);
}

// ------------------------------------------------------------- level counts

TEST(LevelConfigs, HandCounts) {
  EXPECT_EQ(count_level_configs(std::vector<int>{3}), 1u);
  EXPECT_EQ(count_level_configs(std::vector<int>{0}), 1u);
  EXPECT_EQ(count_level_configs(std::vector<int>{1, 2}), 2u);
  EXPECT_EQ(count_level_configs(std::vector<int>{2, 2}), 1u);
}

TEST(LevelConfigs, MatchesOrbitEnumeration) {
  // Oracle: choose increasing levels, a composition of n, and enumerated orbits of each part.
  for (int n = 1; n <= 3; ++n) {
    const int M = std::max(2, n), K = 4;
    std::map<int, std::vector<OrbitSignature>> orbits;
    for (int m = 1; m <= n; ++m)
      for (const auto& o : enumerate_orbits(M, K, m).orbits) orbits[m].push_back(o.signature);
    std::map<std::vector<int>, std::uint64_t> counts;
    // Recursive walk over (level, part size, orbit) triples with strictly increasing levels.
    std::function<void(int, int, std::vector<int>)> walk = [&](int min_level, int left, std::vector<int> agg) {
      if (left == 0) {
        std::sort(agg.begin(), agg.end());
        ++counts[agg];
        return;
      }
      for (int l = min_level; l < K; ++l)
        for (int m = 1; m <= left; ++m)
          for (const auto& o : orbits[m]) {
            if (m > 1 && o.top_level < l) continue;
            auto next = agg;
            next.push_back(l);
            next.insert(next.end(), o.levels.begin(), o.levels.end());
            walk(l + 1, left - m, next);
          }
    };
    walk(0, n, {});
    for (const auto& [levels, count] : counts) {
      if (levels.back() >= K - 1) continue;  // deeper orbits are cut off at this depth
      EXPECT_EQ(count_level_configs(levels), count) << "n " << n;
    }
  }
}

TEST(LevelConfigs, BoundedByFactorialForSmallLevels) {
  for (int n = 1; n <= 3; ++n) {
    std::vector<int> k(static_cast<std::size_t>(n), 0);
    const double bound = std::pow(2.0, n) * std::tgamma(n + 1.0);
    while (true) {
      EXPECT_LE(static_cast<double>(count_level_configs(k)), bound);
      int i = n - 1;
      while (i >= 0 && k[static_cast<std::size_t>(i)] == 4) --i;
      if (i < 0) break;
      const int v = ++k[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < n; ++j) k[static_cast<std::size_t>(j)] = v;
    }
  }
}

TEST(LevelSeries, SingleLevelClosedForm) {
  EXPECT_NEAR(level_series_partial(1, 0.5, 12), 2.0 - std::ldexp(1.0, -12), 1e-14);
  EXPECT_NEAR(level_series_bound(1, 0.5), 4.0, 1e-12);
  for (int n = 1; n <= 3; ++n) {
    double prev = 0.0;
    for (int L = 0; L <= 8; ++L) {
      const double p = level_series_partial(n, 0.5, L);
      EXPECT_GE(p, prev);
      EXPECT_LE(p, level_series_bound(n, 0.5));
      prev = p;
    }
  }
}

// ----------------------------------------------------------------- partial J

namespace {

// Brute-force partial J: all ordered n-tuples, kernel from the sorted-prefix oracle.
double partial_J_oracle(const std::vector<double>& leaves, int M, int K, const std::function<double(int)>& f, double q, int n) {
  double J = 0.0;
  for (std::uint64_t j = 0; j < leaves.size(); ++j) {
    if (leaves[j] <= 0) continue;
    const Word wj = Word::from_index(M, K, j);
    double inner = 0.0;
    for (std::uint64_t t = 0; t < tuple_count(M, K, n); ++t) {
      auto tuple = tuple_at(M, K, n, t);
      double p = 1.0;
      for (const auto& w : tuple) p *= leaves[w.index()];
      if (p == 0.0) continue;
      tuple.push_back(wj);
      for (int l : lcp_levels(tuple)) p *= f(l);
      inner += p;
    }
    J += leaves[j] * std::pow(inner, (q - 1) / n);
  }
  return J;
}

}  // namespace

TEST(PartialJ, MatchesBruteForce) {
  Rng rng(derive_seed(47, 0));
  const std::function<double(int)> f = [](int l) { return std::pow(1.7, l) + 0.3; };
  for (auto [M, K, n] : {std::tuple{2, 3, 1}, std::tuple{2, 3, 2}, std::tuple{2, 3, 3}, std::tuple{3, 2, 2}, std::tuple{3, 2, 3},
                         std::tuple{4, 2, 2}}) {
    for (int trial = 0; trial < 4; ++trial) {
      const auto leaves = random_leaves(rng, M, K);
      const auto tm = TreeMeasure::from_leaf_masses(M, K, leaves);
      for (double q : {static_cast<double>(n) + (n == 1 ? 0.25 : 0.0), n + 0.5, n + 1.0}) {
        const double want = partial_J_oracle(leaves, M, K, f, q, n);
        EXPECT_NEAR(partial_J(tm, f, q, n).value / want, 1.0, 1e-12) << M << " " << K << " " << n << " " << q;
      }
    }
  }
}

TEST(PartialJ, ZeroKernel) {
  const auto tm = TreeMeasure::from_model(MeasureModel::multinomial(2, {0.7, 0.3}), 6);
  EXPECT_EQ(partial_J(tm, [](int) { return 0.0; }, 2.0, 2).value, 0.0);
}

TEST(PartialJ, UniformCriticalKernelGrowsLinearly) {
  // n = 1, q = 2, f = 2^l on the uniform binary tree: each level below K adds 1/2, the diagonal adds 1.
  for (int K = 2; K <= 12; ++K) {
    const auto tm = TreeMeasure::from_model(MeasureModel::uniform(1), K);
    const auto r = partial_J(tm, [](int l) { return std::ldexp(1.0, l); }, 2.0, 1);
    EXPECT_NEAR(r.value, K / 2.0 + 1.0, 1e-12);
    for (double c : r.log_condition) EXPECT_NEAR(c, 0.0, 1e-12);
  }
}

TEST(PartialJ, RejectsQOutsideRange) {
  const auto tm = TreeMeasure::from_model(MeasureModel::uniform(1), 3);
  EXPECT_THROW(partial_J(tm, [](int) { return 1.0; }, 3.5, 2), InvalidArgument);
  EXPECT_THROW(partial_J(tm, [](int) { return 1.0; }, 1.5, 2), InvalidArgument);
}
