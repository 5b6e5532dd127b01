#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gconv/coefficients.hpp"

namespace gconv {

using json = nlohmann::json;

/// One leaf of the experiment config schema (dotted path).
struct SchemaEntry {
  std::string path;
  std::string type;  // string | integer | number | boolean | integer[] | number[] | number? | pieces
  json default_value;
  std::string description;
};

const std::vector<SchemaEntry>& config_schema();

/// Human-readable listing of every config key with type and default.
std::string schema_help();

struct FamilySpec {
  std::string name;
  std::vector<double> params;
  std::optional<double> alpha;
  std::optional<double> beta;
  struct PieceSpec {
    double lo = 0.0;
    double hi = 1.0;
    std::string name;
    std::vector<double> params;
  };
  std::vector<PieceSpec> pieces;  // only for name == "piecewise"
};

struct ExperimentConfig {
  std::string name;
  std::string kind;
  int dimension = 1;
  FamilySpec family;
  FamilySpec potential;
  FamilySpec source;
  std::vector<int> h_list;
  int points_per_period = 32;
  int eigen_count = 3;
  int quad_order = 0;
  double eig_tol = 1e-10;
  long max_dofs = 1000000;
  int cell_resolution = 128;
  bool fem_control = false;
  int windows = 8;
  double test_center = 0.5;
  double test_half_width = 0.25;
  int gamma_targets = 20;
  double gamma_scale = 0.1;
  std::vector<double> gamma_affine;
  int validate_samples = 1000;
  std::uint64_t seed = 12345;
  std::string csv_path;
  std::string json_path;
  int threads = 0;

  json echo;  // the fully-resolved config document (defaults filled in)
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"eigen-homog", "source-homog", "eigen-potential", "gamma",
                                                 "divcurl",     "homogenize",   "validate"};
  return kinds;
}

/// Validates `doc` strictly against the schema (unknown keys and type
/// mismatches raise ConfigError naming the key), applies `overrides`
/// ("dotted.key=value", value parsed as JSON or taken as a string) and
/// fills defaults. A report document (with a "config" member) is accepted
/// and its echoed config is used.
ExperimentConfig parse_config(const json& doc, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

CoefficientFamily build_coefficient_family(const FamilySpec& spec);
PotentialFamily build_potential_family(const FamilySpec& spec);
SourceFamily build_source_family(const FamilySpec& spec);

}  // namespace gconv
