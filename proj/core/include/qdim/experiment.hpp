#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdim/estimator.hpp"
#include "qdim/fields.hpp"
#include "qdim/measure.hpp"

namespace qdim {

enum class PredictionKind { Exact, Interval, Preserved };

std::string to_string(PredictionKind k);

struct Prediction {
  PredictionKind kind = PredictionKind::Exact;
  double value = 0.0;  // the asserted lower dimension of the image
  double lower = 0.0;  // interval endpoints; equal to value unless kind == Interval
  double upper = 0.0;
  double alpha_lower = 0.0;  // alpha_*, alpha^* (zero when preserved)
  double alpha_upper = 0.0;
};

/// Image q-dimension predicted from the field's indices and the source dimension.
/// Throws Unsupported when alpha^* >= 1 or alpha_* <= 0 (except smooth Riesz-Bessel fields).
Prediction predicted_dimension(double q, const FieldSpec& spec, int d, double dq_lower, double dq_upper);
Prediction predicted_dimension(double q, const FieldSpec& spec, int d, double dq);

/// +-0.10 when the prediction sits below d - 0.3, +-0.20 near the cap.
double default_tolerance(double predicted, int d);

/// Number of worker threads: QDIM_THREADS if set, otherwise the hardware concurrency.
int default_threads();

struct ExperimentConfig {
  MeasureModel measure = MeasureModel::uniform(1);
  FieldSpec field = FieldSpec::fbm(0.5);
  bool zero_field = false;  // replace samples by X = 0; the prediction still uses `field`
  std::vector<double> q{2.0};
  int replicates = 1;
  std::size_t grid_resolution = 1024;  // cells per axis on [0,1]^N
  int atom_depth = 8;
  std::optional<int> fit_k_min;  // defaults: see fit_range()
  std::optional<int> fit_k_max;
  EstimateKind estimate_kind = EstimateKind::SingleFit;
  std::uint64_t seed = 0;
  SamplingMethod method = SamplingMethod::Circulant1d;
  std::optional<double> tolerance;
  std::string out;

  void validate() const;
  /// Fit range in dyadic image levels. By default k_min = 2 and k_max sits two levels above
  /// the scale where atom discreteness takes over: floor(K log2(m) D_q(mu) / prediction) - 2.
  std::pair<int, int> fit_range(double q) const;
};

struct ReplicateResult {
  int index = 0;
  std::uint64_t seed = 0;
  bool complete = false;
  std::string error;
  std::vector<DimensionEstimate> estimates;  // one per q
  std::vector<HolderCheck> holder;           // one per q
  std::vector<MomentCurve> curves;           // one per q
};

struct QSummary {
  double q = 2.0;
  Prediction prediction;
  double source_dimension = 0.0;
  int k_min = 0;
  int k_max = 0;
  std::vector<double> estimates;  // replicate order
  double mean = 0.0;
  double sd = 0.0;
  double tolerance = 0.0;
  bool holder_all = false;
  bool pass = false;
};

struct ExperimentReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<ReplicateResult> replicates;
  std::vector<QSummary> summaries;
  bool complete = false;  // every replicate finished
  bool pass = false;
  double elapsed_seconds = 0.0;  // kept out of the serialised report
};

/// Source dimension used for predictions: analytic when available, else fitted on the atoms.
double source_dimension(const ExperimentConfig& config, double q);

ExperimentReport run_experiment(const ExperimentConfig& config, int threads = default_threads());

/// Permutation-invariant mean and sample standard deviation.
std::pair<double, double> mean_sd(std::vector<double> values);

}  // namespace qdim
