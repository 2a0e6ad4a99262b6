#include "qdim/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json_reader.hpp"
#include "qdim/error.hpp"

namespace qdim {

using detail::Reader;
using detail::with_path;

Json load_json_file(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  if (!std::filesystem::exists(p) && !p.has_extension() && std::filesystem::exists(p.string() + ".json"))
    p = p.string() + ".json";
  std::ifstream in(p);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(p.string(), std::string("malformed JSON: ") + e.what());
  }
}

std::string json_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

MeasureModel parse_measure(const Json& j, const std::string& path) {
  Reader r(j, path);
  const std::string kind = r.string("kind");
  const int m = static_cast<int>(r.integer("m", 2));
  const int dim = static_cast<int>(r.integer("dim", 1));
  if (kind == "uniform") {
    r.reject_unknown();
    return with_path(path, [&] { return MeasureModel::uniform(dim, m); });
  }
  if (kind == "multinomial") {
    auto w = r.numbers("weights");
    r.reject_unknown();
    return with_path(r.at("weights"), [&] { return MeasureModel::multinomial(m, w, dim); });
  }
  throw ConfigError(r.at("kind"), "unknown measure kind '" + kind + "' (uniform, multinomial)");
}

ParsedField parse_field(const Json& j, int domain_dim, const std::string& path) {
  Reader r(j, path);
  const std::string kind = r.string("kind");
  const int d = static_cast<int>(r.integer("range_dim", 1));
  ParsedField out{FieldSpec::fbm(0.5), false};
  if (kind == "fbm" || kind == "zero") {
    const double alpha = r.number("alpha");
    r.reject_unknown();
    out.spec = with_path(r.at("alpha"), [&] { return FieldSpec::fbm(alpha, domain_dim, d); });
    out.zero = kind == "zero";
  } else if (kind == "riesz_bessel") {
    const double g = r.number("gamma"), b = r.number("beta");
    r.reject_unknown();
    out.spec = with_path(path, [&] { return FieldSpec::riesz_bessel(g, b, domain_dim, d); });
  } else if (kind == "infinity_scale") {
    auto h = r.numbers("hurst");
    const int j_max = static_cast<int>(r.integer("j_max"));
    const auto tail = static_cast<std::size_t>(r.unsigned_integer("tail_start", 0));
    r.reject_unknown();
    if (domain_dim != 1) throw ConfigError(path + "/kind", "infinity-scale fields need a one-dimensional domain");
    out.spec = with_path(path, [&] { return FieldSpec::infinity_scale(h, j_max, tail, d); });
  } else {
    throw ConfigError(r.at("kind"), "unknown field kind '" + kind + "' (fbm, riesz_bessel, infinity_scale, zero)");
  }
  return out;
}

ExperimentConfig parse_experiment_config(const Json& j) {
  Reader r(j, "");
  ExperimentConfig c;
  c.measure = parse_measure(r.raw("measure"), "/measure");
  auto field = parse_field(r.raw("field"), c.measure.dim(), "/field");
  c.field = field.spec;
  c.zero_field = field.zero;
  if (r.has("q")) {
    const Json& q = r.raw("q");
    c.q = q.is_number() ? std::vector<double>{q.get<double>()} : r.numbers("q");
    for (std::size_t i = 0; i < c.q.size(); ++i)
      if (!(c.q[i] > 1.0)) throw ConfigError(q.is_number() ? "/q" : "/q/" + std::to_string(i), "q must exceed 1");
  }
  c.replicates = static_cast<int>(r.integer("replicates", 1));
  if (c.replicates < 1) throw ConfigError("/replicates", "must be >= 1");
  const auto res = r.integer("grid_resolution", 1024);
  if (res < 1) throw ConfigError("/grid_resolution", "must be positive");
  c.grid_resolution = static_cast<std::size_t>(res);
  c.atom_depth = static_cast<int>(r.integer("atom_depth", 8));
  if (r.has("fit")) {
    Reader f(r.raw("fit"), "/fit");
    c.fit_k_min = static_cast<int>(f.integer("k_min"));
    c.fit_k_max = static_cast<int>(f.integer("k_max"));
    if (f.has("kind"))
      c.estimate_kind = with_path("/fit/kind", [&] { return parse_estimate_kind(f.string("kind")); });
    f.reject_unknown();
  }
  c.seed = r.unsigned_integer("seed", 0);
  if (r.has("method")) c.method = with_path("/method", [&] { return parse_sampling_method(r.string("method")); });
  if (r.has("tolerance")) c.tolerance = r.number("tolerance");
  c.out = r.string("out", "");
  r.reject_unknown();

  const auto m = static_cast<std::size_t>(c.measure.base());
  std::size_t p = 1;
  while (p < c.grid_resolution && p <= c.grid_resolution / m) p *= m;
  if (p != c.grid_resolution) throw ConfigError("/grid_resolution", "must be a power of the measure base");
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("/", e.what());
  }
  return c;
}

// --------------------------------------------------------------------- output

Json to_json(const MeasureModel& m) {
  Json j{{"kind", m.kind_name()}, {"m", m.base()}, {"dim", m.dim()}};
  if (const auto* mn = std::get_if<Multinomial>(&m.variant())) j["weights"] = mn->weights;
  if (const auto* a = std::get_if<Atoms>(&m.variant())) {
    j["depth"] = a->depth();
    j["numerators"] = a->all_numerators();
    j["masses"] = a->masses();
  }
  return j;
}

Json to_json(const FieldSpec& f) {
  Json j{{"kind", f.kind_name()}, {"domain_dim", f.domain_dim()}, {"range_dim", f.range_dim()}};
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Fbm>) {
          j["alpha"] = v.alpha;
        } else if constexpr (std::is_same_v<T, RieszBessel>) {
          j["gamma"] = v.gamma;
          j["beta"] = v.beta;
        } else {
          j["hurst"] = v.hurst;
          j["j_max"] = v.j_max;
          j["tail_start"] = v.tail_start;
        }
      },
      f.variant());
  return j;
}

Json to_json(const ExperimentConfig& c) {
  Json field = to_json(c.field);
  if (c.zero_field) field["kind"] = "zero";
  Json j{{"measure", to_json(c.measure)},
         {"field", field},
         {"q", c.q},
         {"replicates", c.replicates},
         {"grid_resolution", c.grid_resolution},
         {"atom_depth", c.atom_depth},
         {"seed", c.seed},
         {"method", to_string(c.method)},
         {"estimate_kind", to_string(c.estimate_kind)}};
  if (c.fit_k_min) j["fit"] = {{"k_min", *c.fit_k_min}, {"k_max", *c.fit_k_max}};
  if (c.tolerance) j["tolerance"] = *c.tolerance;
  return j;
}

Json to_json(const Prediction& p) {
  return {{"kind", to_string(p.kind)}, {"value", p.value},         {"lower", p.lower},
          {"upper", p.upper},          {"alpha_lower", p.alpha_lower}, {"alpha_upper", p.alpha_upper}};
}

Json to_json(const DimensionEstimate& e) {
  return {{"q", e.q},
          {"slope", e.slope},
          {"stderr", e.std_error},
          {"k_min", e.k_min},
          {"k_max", e.k_max},
          {"kind", to_string(e.kind)},
          {"window_min", e.window_min},
          {"window_max", e.window_max},
          {"proxy", e.proxy()}};
}

Json to_json(const HolderCheck& h) {
  return {{"bound", h.bound}, {"tolerance", h.tolerance}, {"image", h.image}, {"margin", h.margin}, {"holds", h.holds}};
}

Json to_json(const ExperimentReport& r) {
  Json reps = Json::array();
  for (const auto& rep : r.replicates) {
    Json e{{"index", rep.index}, {"seed", rep.seed}, {"complete", rep.complete}};
    if (!rep.error.empty()) e["error"] = rep.error;
    e["estimates"] = Json::array();
    for (std::size_t i = 0; i < rep.estimates.size(); ++i)
      e["estimates"].push_back({{"estimate", to_json(rep.estimates[i])}, {"holder", to_json(rep.holder[i])}});
    reps.push_back(std::move(e));
  }
  Json qs = Json::array();
  for (const auto& s : r.summaries)
    qs.push_back({{"q", s.q},
                  {"prediction", to_json(s.prediction)},
                  {"source_dimension", s.source_dimension},
                  {"fit", {{"k_min", s.k_min}, {"k_max", s.k_max}}},
                  {"estimates", s.estimates},
                  {"mean", s.mean},
                  {"sd", s.sd},
                  {"tolerance", s.tolerance},
                  {"holder_all", s.holder_all},
                  {"pass", s.pass}});
  return {{"metadata",
           {{"config_hash", r.config_hash}, {"seed", r.seed}, {"version", r.version}, {"modules", {
               {"measure-models", r.version}, {"gaussian-fields", r.version}, {"dimension-estimator", r.version},
               {"experiment-cli", r.version}}}}},
          {"replicates", reps},
          {"summaries", qs},
          {"complete", r.complete},
          {"pass", r.pass}};
}

void write_curve_csv(std::ostream& os, const MomentCurve& curve) {
  os << "k,r,value\n" << std::setprecision(17);
  for (const auto& p : curve.points) os << p.k << ',' << p.r << ',' << p.value << '\n';
}

MomentCurve read_curve_csv(std::istream& is, double q, int base) {
  MomentCurve c;
  c.q = q;
  c.base = base;
  std::string line;
  int row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line.rfind("k,", 0) == 0) continue;
    std::istringstream ss(line);
    CurvePoint p{};
    char c1 = 0, c2 = 0;
    if (!(ss >> p.k >> c1 >> p.r >> c2 >> p.value) || c1 != ',' || c2 != ',')
      throw ConfigError("row " + std::to_string(row), "expected k,r,value");
    c.points.push_back(p);
  }
  return c;
}

void write_field_csv(std::ostream& os, const FieldSample& s) {
  const int N = s.grid.dim, d = s.range_dim();
  for (int c = 0; c < N; ++c) os << (c ? "," : "") << "x" << c;
  for (int c = 0; c < d; ++c) os << ",X" << c;
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    const auto pt = s.grid.point(i);
    for (int c = 0; c < N; ++c) os << (c ? "," : "") << pt[static_cast<std::size_t>(c)];
    for (int c = 0; c < d; ++c) os << ',' << s.value(i, c);
    os << '\n';
  }
}

void write_plot_csv(std::ostream& os, const ExperimentReport& r) {
  os << "q,predicted,mean,sd\n" << std::setprecision(17);
  for (const auto& s : r.summaries) os << s.q << ',' << s.prediction.value << ',' << s.mean << ',' << s.sd << '\n';
}

}  // namespace qdim
