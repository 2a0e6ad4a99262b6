#include "qdim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "detail.hpp"
#include "parallel.hpp"
#include "qdim/error.hpp"
#include "qdim/io.hpp"
#include "qdim/rng.hpp"

namespace qdim {

using detail::require;

std::string to_string(PredictionKind k) {
  switch (k) {
    case PredictionKind::Exact: return "exact";
    case PredictionKind::Interval: return "interval";
    case PredictionKind::Preserved: return "preserved";
  }
  return "?";
}

Prediction predicted_dimension(double q, const FieldSpec& spec, int d, double dq_lower, double dq_upper) {
  require(q > 1.0, "q must exceed 1");
  require(d >= 1, "range dimension must be >= 1");
  require(dq_lower >= 0.0 && dq_upper >= dq_lower, "source dimension bounds must satisfy 0 <= lower <= upper");
  Prediction p;
  if (std::holds_alternative<RieszBessel>(spec.variant())) {
    const double idx = spec.riesz_bessel_index();
    if (idx > 1.0) {
      p.kind = PredictionKind::Preserved;
      p.value = p.lower = dq_lower;
      p.upper = dq_upper;
      return p;
    }
  }
  const auto ind = psi_indices(spec.psi());
  if (ind.upper >= 1.0 || ind.lower <= 0.0)
    throw Unsupported("indices outside (0,1): alpha_* = " + std::to_string(ind.lower) +
                      ", alpha^* = " + std::to_string(ind.upper));
  p.alpha_lower = ind.lower;
  p.alpha_upper = ind.upper;
  const double dd = static_cast<double>(d);
  if (std::abs(ind.upper - ind.lower) <= 1e-12) {
    p.kind = PredictionKind::Exact;
    p.value = p.lower = p.upper = std::min(dd, dq_lower / ind.lower);
  } else {
    p.kind = PredictionKind::Interval;
    p.lower = std::min(dd, dq_lower / ind.upper);
    p.upper = std::min(dd, dq_lower / ind.lower);
    p.value = p.lower;
  }
  return p;
}

Prediction predicted_dimension(double q, const FieldSpec& spec, int d, double dq) {
  return predicted_dimension(q, spec, d, dq, dq);
}

double default_tolerance(double predicted, int d) { return predicted < d - 0.3 ? 0.10 : 0.20; }

int default_threads() {
  if (const char* env = std::getenv("QDIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void ExperimentConfig::validate() const {
  require(!q.empty(), "q list is empty");
  for (double v : q) require(v > 1.0, "q entries must exceed 1");
  require(replicates >= 1, "replicates must be >= 1");
  require(atom_depth >= 1, "atom_depth must be >= 1");
  require(field.domain_dim() == measure.dim(), "field and measure dimensions differ");
  const auto m = static_cast<std::size_t>(measure.base());
  std::size_t p = 1;
  while (p < grid_resolution && p <= grid_resolution / m) p *= m;
  require(p == grid_resolution, "grid_resolution must be a power of the measure base");
  std::uint64_t cells = 0;
  require(detail::pow_fits(m, atom_depth + 1, grid_resolution, &cells),
          "grid_resolution must be at least m^(atom_depth + 1) so atoms sit on grid nodes");
  if (fit_k_min || fit_k_max) {
    require(fit_k_min && fit_k_max, "fit needs both k_min and k_max");
    require(*fit_k_min >= 0 && *fit_k_max >= *fit_k_min + 3, "fit range needs at least four levels");
  }
  if (tolerance) require(*tolerance > 0.0, "tolerance must be positive");
}

double source_dimension(const ExperimentConfig& config, double q) {
  if (!config.measure.is_atoms()) return analytic_dq(config.measure, q);
  const int depth = config.measure.as_atoms().depth();
  const auto curve = moment_curve(config.measure, q, 1, std::max(4, depth - 2));
  return estimate_dq(curve, 1, std::max(4, depth - 2)).slope;
}

std::pair<int, int> ExperimentConfig::fit_range(double qv) const {
  if (fit_k_min && fit_k_max) return {*fit_k_min, *fit_k_max};
  const double levels = atom_depth * std::log2(static_cast<double>(measure.base()));
  const double src = source_dimension(*this, qv);
  double pred = 0.0;
  try {
    pred = predicted_dimension(qv, field, field.range_dim(), src).value;
  } catch (const Unsupported&) {
  }
  const double top = pred > 0.0 ? levels * src / pred : levels;
  return {2, std::max(5, static_cast<int>(std::floor(top + 1e-9)) - 2)};
}

std::pair<double, double> mean_sd(std::vector<double> values) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

ExperimentReport run_experiment(const ExperimentConfig& config, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  const int d = config.field.range_dim();
  const int N = config.measure.dim();

  ExperimentReport report;
  report.config_hash = json_hash(to_json(config));
  report.seed = config.seed;
  report.version = version();

  std::vector<std::pair<int, int>> ranges;
  for (double q : config.q) {
    QSummary s;
    s.q = q;
    s.source_dimension = source_dimension(config, q);
    s.prediction = predicted_dimension(q, config.field, d, s.source_dimension);
    std::tie(s.k_min, s.k_max) = config.fit_range(q);
    s.tolerance = config.tolerance.value_or(default_tolerance(s.prediction.value, d));
    report.summaries.push_back(s);
  }

  const MeasureModel atoms = discretize(config.measure, config.atom_depth);
  const Grid grid = Grid::uniform(N, config.grid_resolution, 0.0, 1.0);

  report.replicates.resize(static_cast<std::size_t>(config.replicates));
  detail::parallel_for(report.replicates.size(), threads, [&](std::size_t r) {
    ReplicateResult& out = report.replicates[r];
    out.index = static_cast<int>(r);
    out.seed = derive_seed(config.seed, r);
    try {
      ImageMeasure im;
      if (config.zero_field) {
        const auto& a = atoms.as_atoms();
        std::vector<double> pts(a.size() * static_cast<std::size_t>(d), 0.0);
        im = image_from_points(d, pts, a.masses());
      } else {
        const FieldSample sample = sample_field(config.field, grid, out.seed, config.method);
        im = image_measure(sample, atoms);
      }
      for (const auto& s : report.summaries) {
        auto curve = image_moment_curve(im, s.q, s.k_min, s.k_max);
        auto est = estimate_dq(curve, s.k_min, s.k_max, config.estimate_kind);
        const double alpha =
            s.prediction.kind == PredictionKind::Preserved ? 1.0 : s.prediction.alpha_lower;
        out.holder.push_back(holder_upper_check(est, exact_estimate(s.q, s.source_dimension), alpha, d));
        out.estimates.push_back(est);
        out.curves.push_back(std::move(curve));
      }
      out.complete = true;
    } catch (const std::exception& e) {
      out.error = e.what();
      out.estimates.clear();
      out.holder.clear();
      out.curves.clear();
    }
  });

  report.complete = std::all_of(report.replicates.begin(), report.replicates.end(),
                                [](const ReplicateResult& r) { return r.complete; });
  report.pass = report.complete;
  for (std::size_t i = 0; i < report.summaries.size(); ++i) {
    auto& s = report.summaries[i];
    s.holder_all = true;
    for (const auto& r : report.replicates) {
      if (!r.complete) continue;
      s.estimates.push_back(r.estimates[i].proxy());
      s.holder_all = s.holder_all && r.holder[i].holds;
    }
    std::tie(s.mean, s.sd) = mean_sd(s.estimates);
    const auto& p = s.prediction;
    const bool within = p.kind == PredictionKind::Interval
                            ? (s.mean >= p.lower - s.tolerance && s.mean <= p.upper + s.tolerance)
                            : std::abs(s.mean - p.value) <= s.tolerance;
    s.pass = report.complete && within && s.holder_all;
    report.pass = report.pass && s.pass;
  }
  report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace qdim
