#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "qdim/estimator.hpp"
#include "qdim/experiment.hpp"
#include "qdim/fields.hpp"
#include "qdim/measure.hpp"

namespace qdim {

using Json = nlohmann::json;

/// Reads a JSON file; a path without extension falls back to path + ".json".
/// Failures throw ConfigError naming the file.
Json load_json_file(const std::filesystem::path& path);

/// FNV-1a of the compact dump, as 16 hex digits.
std::string json_hash(const Json& j);

// Parsers throw ConfigError with the JSON pointer of the offending key. Unknown keys are rejected.
MeasureModel parse_measure(const Json& j, const std::string& path = "");
struct ParsedField {
  FieldSpec spec;
  bool zero = false;
};
ParsedField parse_field(const Json& j, int domain_dim, const std::string& path = "");
ExperimentConfig parse_experiment_config(const Json& j);

Json to_json(const MeasureModel& m);
Json to_json(const FieldSpec& f);
Json to_json(const ExperimentConfig& c);
Json to_json(const Prediction& p);
Json to_json(const DimensionEstimate& e);
Json to_json(const HolderCheck& h);
Json to_json(const ExperimentReport& r);

void write_curve_csv(std::ostream& os, const MomentCurve& curve);
MomentCurve read_curve_csv(std::istream& is, double q, int base = 2);
void write_field_csv(std::ostream& os, const FieldSample& sample);
/// q, predicted, mean, sd
void write_plot_csv(std::ostream& os, const ExperimentReport& r);

}  // namespace qdim
