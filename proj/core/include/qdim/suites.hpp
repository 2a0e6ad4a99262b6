#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qdim {

struct SuiteSection {
  std::string name;
  std::uint64_t checks = 0;
  std::uint64_t violations = 0;
  double worst = 0.0;  // largest observed statistic (count, or lhs/rhs)
  double bound = 0.0;  // the bound the statistic is held to, where one applies
  nlohmann::json first_violation = nullptr;
};

struct SuiteReport {
  std::string suite;
  std::vector<SuiteSection> sections;
  double elapsed_seconds = 0.0;

  bool pass() const noexcept;
  const SuiteSection& section(const std::string& name) const;
};

nlohmann::json to_json(const SuiteReport& r, bool include_timing = false);

struct UltrametricSuiteOptions {
  std::vector<int> bases{4, 6, 10};
  std::vector<int> dims{1, 2};
  std::uint64_t lower_pairs = 100'000;      // per (m, N)
  std::uint64_t exception_pairs = 10'000;   // per (m, N)
  std::uint64_t translate_sets = 10'000;    // per (n, N)
  int max_points = 3;
  std::uint64_t triples = 10'000;           // ultrametric inequality, per (m, N)
  std::uint64_t seed = 0;
};

/// Lower bound for every translate, exception counts against N (m/2)^(N-1), and translate
/// selection at m = 2 n^2 N + 2 on random point sets (half of them clustered).
SuiteReport run_ultrametric_suite(const UltrametricSuiteOptions& options, int threads = 1);

struct TreeSuiteOptions {
  int branching = 2;
  int max_depth = 4;
  std::vector<int> ns{1, 2, 3};
  std::vector<double> qs{2.0, 2.5, 3.0, 3.5};
  int measures = 100;
  std::uint64_t seed = 0;
  int count_max_level = 6;
  int count_max_n = 4;
  double series_lambda = 0.5;
  int series_max_n = 3;
  int series_max_level = 12;
};

/// Both tree inequalities over the exhaustive grid of depths, tuple sizes, exponents and random
/// measures, the orbit partition of tuple space, the level-configuration bound and the series bound.
SuiteReport run_tree_suite(const TreeSuiteOptions& options, int threads = 1);

UltrametricSuiteOptions parse_ultrametric_suite(const nlohmann::json& j);
TreeSuiteOptions parse_tree_suite(const nlohmann::json& j);

}  // namespace qdim
