// qdim: command-line front end for simulations, estimates and verification suites.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "qdim/error.hpp"
#include "qdim/estimator.hpp"
#include "qdim/experiment.hpp"
#include "qdim/io.hpp"
#include "qdim/rng.hpp"
#include "qdim/smallball.hpp"
#include "qdim/suites.hpp"

namespace fs = std::filesystem;
using qdim::Json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  std::optional<double> tolerance;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON configuration file (a missing .json extension is added)");
  app->add_option("--seed", c.seed, "master seed, overrides the config");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--threads", c.threads, "worker threads (default: QDIM_THREADS or all cores)")
      ->check(CLI::Range(1, 1024));
  app->add_option("--tolerance", c.tolerance, "pass/fail tolerance, overrides the config")
      ->check(CLI::PositiveNumber);
}

Json load_or(const Common& c, Json fallback) { return c.config.empty() ? fallback : qdim::load_json_file(c.config); }

int threads_of(const Common& c) { return c.threads.value_or(qdim::default_threads()); }

// Writes to <out>/<name>, or to stdout when no output directory is given.
void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(c.out);
  const fs::path p = fs::path(c.out) / name;
  std::ofstream f(p);
  if (!f) throw qdim::Error("cannot write " + p.string());
  f << text;
  std::cerr << "wrote " << p.string() << "\n";
}

const qdim::Json& member(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw qdim::ConfigError("/" + key, "missing required key");
  return j.at(key);
}

template <class T>
T value_or(const Json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw qdim::ConfigError("/" + key, "has the wrong type");
  }
}

// ------------------------------------------------------------------ commands

int cmd_simulate(const Common& c) {
  const Json j = load_or(c, Json{{"field", {{"kind", "fbm"}, {"alpha", 0.5}}}, {"cells", 1024}});
  const int N = value_or(j, "domain_dim", 1);
  const auto field = qdim::parse_field(member(j, "field"), N, "/field");
  const auto cells = value_or<std::size_t>(j, "cells", 1024);
  const double lo = value_or(j, "lo", 0.0), hi = value_or(j, "hi", 1.0);
  const auto method = qdim::parse_sampling_method(
      value_or<std::string>(j, "method", N == 1 && lo == 0.0 ? "circulant" : "cholesky"));
  const auto seed = c.seed.value_or(value_or<std::uint64_t>(j, "seed", 0));
  const auto grid = qdim::Grid::uniform(N, cells, lo, hi);
  auto sample = qdim::sample_field(field.spec, grid, seed, method);
  if (field.zero) std::fill(sample.values.begin(), sample.values.end(), 0.0);
  std::ostringstream os;
  qdim::write_field_csv(os, sample);
  emit(c, "field.csv", os.str());
  return 0;
}

int cmd_moments(const Common& c) {
  const Json j = load_or(c, Json{{"measure", {{"kind", "uniform"}}}});
  const auto measure = qdim::parse_measure(member(j, "measure"), "/measure");
  const double q = value_or(j, "q", 2.0);
  const int k_min = value_or(j, "k_min", 1), k_max = value_or(j, "k_max", 10);
  qdim::MomentCurve curve;
  if (j.contains("field")) {
    // Image curve: push the level-K atoms through one sampled field.
    const auto field = qdim::parse_field(j.at("field"), measure.dim(), "/field");
    const int K = value_or(j, "atom_depth", 8);
    const auto res = value_or<std::size_t>(j, "grid_resolution", std::size_t{1} << (K + 1));
    const auto atoms = qdim::discretize(measure, K);
    const auto grid = qdim::Grid::uniform(measure.dim(), res, 0.0, 1.0);
    const auto seed = c.seed.value_or(value_or<std::uint64_t>(j, "seed", 0));
    const auto method = qdim::parse_sampling_method(value_or<std::string>(j, "method", "circulant"));
    auto sample = qdim::sample_field(field.spec, grid, qdim::derive_seed(seed, 0), method);
    if (field.zero) std::fill(sample.values.begin(), sample.values.end(), 0.0);
    curve = qdim::image_moment_curve(qdim::image_measure(sample, atoms), q, k_min, k_max);
  } else {
    curve = qdim::moment_curve(measure, q, k_min, k_max);
  }
  std::ostringstream os;
  qdim::write_curve_csv(os, curve);
  emit(c, "curve.csv", os.str());
  return 0;
}

int cmd_estimate(const Common& c, const std::string& input, double q, std::optional<int> k_min,
                 std::optional<int> k_max, const std::string& kind) {
  Json j = load_or(c, Json::object());
  std::string path = input.empty() ? value_or<std::string>(j, "curve", "") : input;
  if (path.empty()) throw qdim::ConfigError("/curve", "no curve CSV given (use --input or the curve key)");
  q = value_or(j, "q", q);
  std::ifstream f(path);
  if (!f) throw qdim::ConfigError(path, "cannot open curve file");
  const auto curve = qdim::read_curve_csv(f, q);
  if (curve.points.empty()) throw qdim::ConfigError(path, "curve has no rows");
  const int lo = k_min.value_or(value_or(j, "k_min", curve.points.front().k));
  const int hi = k_max.value_or(value_or(j, "k_max", curve.points.back().k));
  const auto est = qdim::estimate_dq(curve, lo, hi, qdim::parse_estimate_kind(value_or<std::string>(j, "kind", kind)));
  emit(c, "estimate.json", qdim::to_json(est).dump(2) + "\n");
  return 0;
}

int cmd_verify_ultrametric(const Common& c) {
  auto o = qdim::parse_ultrametric_suite(load_or(c, Json::object()));
  if (c.seed) o.seed = *c.seed;
  const auto rep = qdim::run_ultrametric_suite(o, threads_of(c));
  emit(c, "ultrametric.json", qdim::to_json(rep).dump(2) + "\n");
  return rep.pass() ? 0 : 1;
}

int cmd_verify_tree(const Common& c) {
  auto o = qdim::parse_tree_suite(load_or(c, Json::object()));
  if (c.seed) o.seed = *c.seed;
  const auto rep = qdim::run_tree_suite(o, threads_of(c));
  emit(c, "tree.json", qdim::to_json(rep).dump(2) + "\n");
  return rep.pass() ? 0 : 1;
}

int cmd_verify_smallball(const Common& c) {
  const Json j = load_or(c, Json{{"alpha", 0.5}, {"x", {{0.1}}}, {"y", {0.3}}});
  qdim::SmallBallOptions o;
  const double alpha = value_or(j, "alpha", 0.5);
  const int d = value_or(j, "range_dim", 1);
  o.x = value_or(j, "x", std::vector<std::vector<double>>{{0.1}});
  o.y = value_or(j, "y", std::vector<double>{0.3});
  o.radii = value_or(j, "radii", std::vector<double>{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256});
  o.s = value_or(j, "s", static_cast<double>(d));
  o.replicates = value_or<std::uint64_t>(j, "replicates", 1'000'000);
  o.min_hits = value_or<std::uint64_t>(j, "min_hits", o.min_hits);
  o.seed = c.seed.value_or(value_or<std::uint64_t>(j, "seed", 0));
  o.tolerance = c.tolerance.value_or(value_or(j, "tolerance", 0.1));
  for (const auto& [key, v] : j.items())
    if (key != "alpha" && key != "range_dim" && key != "x" && key != "y" && key != "radii" && key != "s" &&
        key != "replicates" && key != "min_hits" && key != "seed" && key != "tolerance")
      throw qdim::ConfigError("/" + key, "unknown key");
  const auto spec = qdim::FieldSpec::fbm(alpha, static_cast<int>(o.y.size()), d);
  const auto rep = qdim::verify_smallball(spec, o);
  Json pts = Json::array();
  for (const auto& p : rep.points) {
    Json e{{"r", p.r},           {"probability", p.probability}, {"hits", p.hits},   {"std_error", p.std_error},
           {"flagged", p.flagged}, {"bound_term", p.bound_term},   {"ratio", p.ratio}};
    if (p.closed_form) e["closed_form"] = *p.closed_form;
    pts.push_back(std::move(e));
  }
  const bool pass = rep.fitted_points >= 2 && rep.slope_above;
  const Json out{{"n", rep.n},         {"m", rep.m},
                 {"s", rep.s},         {"phi_sum", rep.phi_sum},
                 {"points", pts},      {"slope", rep.slope},
                 {"slope_std_error", rep.slope_std_error}, {"fitted_points", rep.fitted_points},
                 {"target", rep.target}, {"fitted_constant", rep.fitted_constant},
                 {"slope_within", rep.slope_within}, {"slope_above", rep.slope_above},
                 {"pass", pass}};
  emit(c, "smallball.json", out.dump(2) + "\n");
  return pass ? 0 : 1;
}

const Json kDefaultExperiment = {{"measure", {{"kind", "uniform"}, {"m", 2}}},
                                 {"field", {{"kind", "fbm"}, {"alpha", 0.5}}},
                                 {"q", {2.0}},
                                 {"replicates", 4},
                                 {"grid_resolution", 4096},
                                 {"atom_depth", 10},
                                 {"seed", 0}};

int cmd_experiment(Common c) {
  auto config = qdim::parse_experiment_config(load_or(c, kDefaultExperiment));
  if (c.seed) config.seed = *c.seed;
  if (c.tolerance) config.tolerance = *c.tolerance;
  if (c.out.empty()) c.out = config.out.empty() ? "." : config.out;
  const auto rep = qdim::run_experiment(config, threads_of(c));
  emit(c, "report.json", qdim::to_json(rep).dump(2) + "\n");
  std::ostringstream plot, curves;
  qdim::write_plot_csv(plot, rep);
  emit(c, "plot.csv", plot.str());
  curves << "replicate,q,k,r,value\n" << std::setprecision(17);
  for (const auto& r : rep.replicates)
    for (const auto& curve : r.curves)
      for (const auto& p : curve.points) curves << r.index << ',' << curve.q << ',' << p.k << ',' << p.r << ',' << p.value << '\n';
  emit(c, "curves.csv", curves.str());
  emit(c, "timings.json", Json{{"elapsed_seconds", rep.elapsed_seconds}, {"threads", threads_of(c)}}.dump(2) + "\n");
  for (const auto& s : rep.summaries)
    std::cerr << "q=" << s.q << " predicted=" << s.prediction.value << " mean=" << s.mean << " sd=" << s.sd
              << " tol=" << s.tolerance << (s.pass ? " PASS" : " FAIL") << "\n";
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qdim: generalized dimensions of Gaussian-field images"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qdim::version()));

  Common common;
  auto* simulate = app.add_subcommand("simulate", "sample a field on a grid and write CSV");
  auto* moments = app.add_subcommand("moments", "moment curve of a measure or of its image");
  auto* estimate = app.add_subcommand("estimate", "fit a dimension from a curve CSV");
  auto* vu = app.add_subcommand("verify-ultrametric", "run the translated-ultrametric suite");
  auto* vt = app.add_subcommand("verify-tree", "run the tree inequality suite");
  auto* vs = app.add_subcommand("verify-smallball", "Monte Carlo small-ball exponent check");
  auto* experiment = app.add_subcommand("experiment", "full pipeline: report JSON and plot CSV");
  for (auto* sub : {simulate, moments, estimate, vu, vt, vs, experiment}) add_common(sub, common);

  std::string input, kind = "single-fit";
  double q = 2.0;
  std::optional<int> k_min, k_max;
  estimate->add_option("--input", input, "curve CSV with columns k,r,value");
  estimate->add_option("--q", q, "moment order of the curve");
  estimate->add_option("--k-min", k_min);
  estimate->add_option("--k-max", k_max);
  estimate->add_option("--kind", kind, "single-fit, lower or upper");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return cmd_simulate(common);
    if (*moments) return cmd_moments(common);
    if (*estimate) return cmd_estimate(common, input, q, k_min, k_max, kind);
    if (*vu) return cmd_verify_ultrametric(common);
    if (*vt) return cmd_verify_tree(common);
    if (*vs) return cmd_verify_smallball(common);
    if (*experiment) return cmd_experiment(common);
  } catch (const qdim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
