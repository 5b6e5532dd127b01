#include "gconv/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace gconv {

const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> schema = {
      {"name", "string", "experiment", "experiment name; default stem of the output files"},
      {"kind", "string", "eigen-homog",
       "eigen-homog | source-homog | eigen-potential | gamma | divcurl | homogenize | validate (set by the subcommand)"},
      {"dimension", "integer", 1, "1 (unit interval) or 2 (unit square)"},
      {"family.name", "string", "osc1d", "coefficient family: osc1d, twophase1d, laminate2d, laminate2d-osc, const, piecewise"},
      {"family.params", "number[]", json::array({2.0, 1.0}), "coefficient family parameters"},
      {"family.alpha", "number?", nullptr, "declared ellipticity constant (null: from params)"},
      {"family.beta", "number?", nullptr, "declared bound (null: from params)"},
      {"family.pieces", "pieces", json::array(),
       "for family.name = piecewise: [{lo, hi, name, params}] on disjoint subintervals"},
      {"potential.name", "string", "sin2-potential", "potential family: sin2-potential, spike-potential, const-potential"},
      {"potential.params", "number[]", json::array(), "potential family parameters"},
      {"source.name", "string", "const-source", "source family: const-source, osc-source"},
      {"source.params", "number[]", json::array({1.0}), "source family parameters"},
      {"h_list", "integer[]", json::array({4, 8, 16, 32, 64}), "ascending sequence indices h"},
      {"points_per_period", "integer", 32, "mesh cells per period 1/h (>= 16); mesh size 1/(m h)"},
      {"eigen_count", "integer", 3, "number k of smallest eigenpairs"},
      {"quad_order", "integer", 0, "quadrature degree per cell (0: 4-point Gauss / 3-point triangle)"},
      {"solver.eig_tol", "number", 1e-10, "relative eigen-residual tolerance"},
      {"solver.max_dofs", "integer", 1000000, "largest admissible number of unknowns"},
      {"cell_resolution", "integer", 128, "unit-cell mesh resolution for 2D cell problems"},
      {"fem_control", "boolean", false, "rerun the largest h with doubled points_per_period"},
      {"windows", "integer", 8, "number of averaging windows (per axis) for weak-limit probes"},
      {"test_function.center", "number", 0.5, "bump test function centre (each coordinate)"},
      {"test_function.half_width", "number", 0.25, "bump test function half width"},
      {"gamma.targets", "integer", 20, "random liminf targets"},
      {"gamma.perturbation_scale", "number", 0.1, "liminf perturbation amplitude (times 1/h)"},
      {"gamma.affine", "number[]", json::array({1.0, 0.0}), "recovery probe u(x) = a x + b as [a, b]"},
      {"validate.samples", "integer", 1000, "ellipticity samples per h"},
      {"seed", "integer", 12345, "random seed"},
      {"output.csv", "string", "", "CSV report file (default <name>.csv)"},
      {"output.json", "string", "", "JSON report file (default <name>.json)"},
      {"threads", "integer", 0, "worker threads (0: hardware; capped by GCONV_THREADS)"},
  };
  return schema;
}

std::string schema_help() {
  std::string out = "Config keys (JSON document; dotted paths):\n";
  for (const auto& e : config_schema())
    out += fmt::format("  {:<26} {:<10} default {:<22} {}\n", e.path, e.type, e.default_value.dump(), e.description);
  return out;
}

namespace {

const SchemaEntry* find_entry(const std::string& path) {
  for (const auto& e : config_schema())
    if (e.path == path) return &e;
  return nullptr;
}

bool is_prefix(const std::string& path) {
  const std::string p = path + ".";
  return std::any_of(config_schema().begin(), config_schema().end(),
                     [&](const SchemaEntry& e) { return e.path.rfind(p, 0) == 0; });
}

void check_pieces(const std::string& path, const json& v) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of pieces");
  for (const auto& piece : v) {
    if (!piece.is_object()) throw ConfigError(path, "each piece must be an object");
    for (const auto& [key, value] : piece.items()) {
      if (key == "lo" || key == "hi") {
        if (!value.is_number()) throw ConfigError(path + "." + key, "expected number");
      } else if (key == "name") {
        if (!value.is_string()) throw ConfigError(path + ".name", "expected string");
      } else if (key == "params") {
        if (!value.is_array() || !std::all_of(value.begin(), value.end(), [](const json& x) { return x.is_number(); }))
          throw ConfigError(path + ".params", "expected number[]");
      } else {
        throw ConfigError(path + "." + key, "unknown key");
      }
    }
    if (!piece.contains("lo") || !piece.contains("hi") || !piece.contains("name"))
      throw ConfigError(path, "each piece needs lo, hi and name");
  }
}

void check_type(const SchemaEntry& e, const json& v) {
  auto all = [&](auto pred) { return v.is_array() && std::all_of(v.begin(), v.end(), pred); };
  bool ok = false;
  if (e.type == "string") ok = v.is_string();
  else if (e.type == "integer") ok = v.is_number_integer();
  else if (e.type == "number") ok = v.is_number();
  else if (e.type == "boolean") ok = v.is_boolean();
  else if (e.type == "integer[]") ok = all([](const json& x) { return x.is_number_integer(); });
  else if (e.type == "number[]") ok = all([](const json& x) { return x.is_number(); });
  else if (e.type == "number?") ok = v.is_null() || v.is_number();
  else if (e.type == "pieces") {
    check_pieces(e.path, v);
    ok = true;
  }
  if (!ok) throw ConfigError(e.path, "expected " + e.type + ", got " + v.dump());
}

void flatten(const json& node, const std::string& prefix, std::map<std::string, json>& out) {
  if (!node.is_object()) throw ConfigError(prefix.empty() ? "config" : prefix, "expected an object");
  for (const auto& [key, value] : node.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (const SchemaEntry* e = find_entry(path)) {
      check_type(*e, value);
      out[path] = value;
    } else if (is_prefix(path)) {
      flatten(value, path, out);
    } else {
      throw ConfigError(path, "unknown key");
    }
  }
}

template <class T>
T get(const std::map<std::string, json>& flat, const std::string& path) {
  return flat.at(path).get<T>();
}

FamilySpec read_family(const std::map<std::string, json>& flat, const std::string& prefix, bool coefficient) {
  FamilySpec s;
  s.name = get<std::string>(flat, prefix + ".name");
  s.params = get<std::vector<double>>(flat, prefix + ".params");
  if (coefficient) {
    if (!flat.at(prefix + ".alpha").is_null()) s.alpha = get<double>(flat, prefix + ".alpha");
    if (!flat.at(prefix + ".beta").is_null()) s.beta = get<double>(flat, prefix + ".beta");
    for (const auto& p : flat.at(prefix + ".pieces")) {
      FamilySpec::PieceSpec piece;
      piece.lo = p.at("lo").get<double>();
      piece.hi = p.at("hi").get<double>();
      piece.name = p.at("name").get<std::string>();
      if (p.contains("params")) piece.params = p.at("params").get<std::vector<double>>();
      s.pieces.push_back(std::move(piece));
    }
  }
  return s;
}

json unflatten(const std::map<std::string, json>& flat) {
  json doc = json::object();
  for (const auto& e : config_schema()) doc[json::json_pointer("/" + [&] {
    std::string p = e.path;
    std::replace(p.begin(), p.end(), '.', '/');
    return p;
  }())] = flat.at(e.path);
  return doc;
}

}  // namespace

ExperimentConfig parse_config(const json& input, const std::vector<std::string>& overrides) {
  const json& doc = (input.is_object() && input.contains("config") && input.contains("tool")) ? input.at("config") : input;
  std::map<std::string, json> flat;
  for (const auto& e : config_schema()) flat[e.path] = e.default_value;
  flatten(doc, "", flat);

  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(ov, "override must have the form key=value");
    const std::string key = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    const SchemaEntry* e = find_entry(key);
    if (!e) throw ConfigError(key, "unknown key");
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    check_type(*e, value);
    flat[key] = value;
  }

  ExperimentConfig c;
  c.name = get<std::string>(flat, "name");
  c.kind = get<std::string>(flat, "kind");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end())
    throw ConfigError("kind", "unknown experiment kind '" + c.kind + "'");
  c.dimension = get<int>(flat, "dimension");
  if (c.dimension != 1 && c.dimension != 2) throw ConfigError("dimension", "must be 1 or 2");
  c.family = read_family(flat, "family", true);
  c.potential = read_family(flat, "potential", false);
  c.source = read_family(flat, "source", false);
  c.h_list = get<std::vector<int>>(flat, "h_list");
  if (c.h_list.empty()) throw ConfigError("h_list", "must not be empty");
  for (std::size_t i = 0; i < c.h_list.size(); ++i) {
    if (c.h_list[i] < 1) throw ConfigError("h_list", "indices must be positive");
    if (i > 0 && c.h_list[i] <= c.h_list[i - 1]) throw ConfigError("h_list", "must be strictly ascending");
  }
  c.points_per_period = get<int>(flat, "points_per_period");
  if (c.points_per_period < kMinSamplesPerPeriod)
    throw ConfigError("points_per_period", "must be >= " + std::to_string(kMinSamplesPerPeriod) +
                                               " (oscillation resolution rule)");
  c.eigen_count = get<int>(flat, "eigen_count");
  if (c.eigen_count < 1) throw ConfigError("eigen_count", "must be >= 1");
  c.quad_order = get<int>(flat, "quad_order");
  if (c.quad_order < 0) throw ConfigError("quad_order", "must be >= 0");
  c.eig_tol = get<double>(flat, "solver.eig_tol");
  if (!(c.eig_tol > 0.0)) throw ConfigError("solver.eig_tol", "must be > 0");
  c.max_dofs = get<long>(flat, "solver.max_dofs");
  c.cell_resolution = get<int>(flat, "cell_resolution");
  c.fem_control = get<bool>(flat, "fem_control");
  c.windows = get<int>(flat, "windows");
  if (c.windows < 1) throw ConfigError("windows", "must be >= 1");
  c.test_center = get<double>(flat, "test_function.center");
  c.test_half_width = get<double>(flat, "test_function.half_width");
  if (!(c.test_half_width > 0.0)) throw ConfigError("test_function.half_width", "must be > 0");
  c.gamma_targets = get<int>(flat, "gamma.targets");
  c.gamma_scale = get<double>(flat, "gamma.perturbation_scale");
  c.gamma_affine = get<std::vector<double>>(flat, "gamma.affine");
  if (c.gamma_affine.size() != 2) throw ConfigError("gamma.affine", "expected [slope, intercept]");
  c.validate_samples = get<int>(flat, "validate.samples");
  if (c.validate_samples < 1) throw ConfigError("validate.samples", "must be >= 1");
  const long seed = get<long>(flat, "seed");
  if (seed < 0) throw ConfigError("seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.csv_path = get<std::string>(flat, "output.csv");
  c.json_path = get<std::string>(flat, "output.json");
  if (c.csv_path.empty()) c.csv_path = c.name + ".csv";
  if (c.json_path.empty()) c.json_path = c.name + ".json";
  c.threads = get<int>(flat, "threads");
  c.echo = unflatten(flat);
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const json doc = json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config", "'" + path + "' is not valid JSON");
  return parse_config(doc, overrides);
}

namespace {

template <class Fn>
auto with_prefix(const std::string& prefix, Fn&& fn) {
  try {
    return fn();
  } catch (const ResolutionError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + (e.key().empty() ? "" : "." + e.key()), e.detail());
  }
}

}  // namespace

CoefficientFamily build_coefficient_family(const FamilySpec& spec) {
  return with_prefix("family", [&] {
    if (spec.name != "piecewise") return make_coefficient_family(spec.name, spec.params, spec.alpha, spec.beta);
    std::vector<CoefficientFamily::Piece> pieces;
    for (const auto& p : spec.pieces) pieces.push_back({p.lo, p.hi, make_coefficient_family(p.name, p.params)});
    CoefficientFamily f = make_piecewise_family(std::move(pieces));
    if (spec.alpha) f.alpha = *spec.alpha;
    if (spec.beta) f.beta = *spec.beta;
    return f;
  });
}

PotentialFamily build_potential_family(const FamilySpec& spec) {
  return with_prefix("potential", [&] { return make_potential_family(spec.name, spec.params); });
}

SourceFamily build_source_family(const FamilySpec& spec) {
  return with_prefix("source", [&] { return make_source_family(spec.name, spec.params); });
}

}  // namespace gconv
