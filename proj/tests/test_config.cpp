#include <doctest.h>

#include <algorithm>

#include "gconv/config.hpp"

using namespace gconv;

namespace {

std::string key_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("defaults fill an empty document") {
  const ExperimentConfig c = parse_config(json::object());
  CHECK(c.kind == "eigen-homog");
  CHECK(c.dimension == 1);
  CHECK(c.family.name == "osc1d");
  CHECK(c.h_list == std::vector<int>{4, 8, 16, 32, 64});
  CHECK(c.points_per_period == 32);
  CHECK(c.eigen_count == 3);
  CHECK(c.eig_tol == 1e-10);
  CHECK(c.csv_path == "experiment.csv");
  CHECK(c.json_path == "experiment.json");
  CHECK_FALSE(c.family.alpha.has_value());
  // the echo holds every schema key
  for (const auto& e : config_schema()) {
    std::string ptr = "/" + e.path;
    std::replace(ptr.begin(), ptr.end(), '.', '/');
    CHECK(c.echo.contains(json::json_pointer(ptr)));
  }
}

TEST_CASE("unknown keys and wrong types name the key") {
  CHECK(key_of([] { parse_config(json::parse(R"({"bogus": 1})")); }) == "bogus");
  CHECK(key_of([] { parse_config(json::parse(R"({"solver": {"tol": 1}})")); }) == "solver.tol");
  CHECK(key_of([] { parse_config(json::parse(R"({"eigen_count": "three"})")); }) == "eigen_count");
  CHECK(key_of([] { parse_config(json::parse(R"({"h_list": [1.5, 2]})")); }) == "h_list");
  CHECK(key_of([] { parse_config(json::parse(R"({"family": 3})")); }) == "family");
  CHECK(key_of([] { parse_config(json::parse(R"({"family": {"pieces": [{"lo": 0, "hi": 1}]}})")); }) ==
        "family.pieces");
}

TEST_CASE("semantic checks") {
  CHECK(key_of([] { parse_config(json::parse(R"({"h_list": [8, 4]})")); }) == "h_list");
  CHECK(key_of([] { parse_config(json::parse(R"({"h_list": []})")); }) == "h_list");
  CHECK(key_of([] { parse_config(json::parse(R"({"points_per_period": 8})")); }) == "points_per_period");
  CHECK(key_of([] { parse_config(json::parse(R"({"dimension": 3})")); }) == "dimension");
  CHECK(key_of([] { parse_config(json::parse(R"({"kind": "nope"})")); }) == "kind");
  CHECK(key_of([] { parse_config(json::parse(R"({"eigen_count": 0})")); }) == "eigen_count");
  CHECK(key_of([] { parse_config(json::parse(R"({"gamma": {"affine": [1]}})")); }) == "gamma.affine");
}

TEST_CASE("overrides are parsed and type-checked") {
  const ExperimentConfig c = parse_config(json::object(), {"eigen_count=5", "family.name=const", "family.params=[2]",
                                                           "name=run1", "fem_control=true", "family.alpha=1.5"});
  CHECK(c.eigen_count == 5);
  CHECK(c.family.name == "const");
  CHECK(c.family.params == std::vector<double>{2});
  CHECK(c.name == "run1");
  CHECK(c.fem_control);
  CHECK(*c.family.alpha == 1.5);
  CHECK(c.echo["eigen_count"] == 5);
  CHECK(key_of([] { parse_config(json::object(), {"eigen_count=many"}); }) == "eigen_count");
  CHECK(key_of([] { parse_config(json::object(), {"nope=1"}); }) == "nope");
  CHECK(key_of([] { parse_config(json::object(), {"noequals"}); }) == "noequals");
}

TEST_CASE("a report document is accepted as a config") {
  const ExperimentConfig c = parse_config(json::object(), {"eigen_count=2"});
  json report = {{"tool", {{"name", "gconv"}}}, {"config", c.echo}, {"points", json::array()}};
  const ExperimentConfig d = parse_config(report);
  CHECK(d.echo == c.echo);
}

TEST_CASE("family builders re-key errors") {
  FamilySpec bad{"osc1d", {2, 1, 5}, std::nullopt, std::nullopt, {}};
  CHECK(key_of([&] { build_coefficient_family(bad); }).rfind("family", 0) == 0);
  FamilySpec pot{"spike-potential", {1}, std::nullopt, std::nullopt, {}};
  CHECK(key_of([&] { build_potential_family(pot); }).rfind("potential", 0) == 0);
  FamilySpec pw{"piecewise", {}, std::nullopt, std::nullopt,
                {{0.0, 0.5, "osc1d", {2, 1}}, {0.5, 1.0, "const", {5}}}};
  const CoefficientFamily f = build_coefficient_family(pw);
  CHECK(f(4, {0.9, 0}).xx == 5.0);
}

TEST_CASE("schema help lists every key") {
  const std::string help = schema_help();
  for (const auto& e : config_schema()) CHECK(help.find(e.path) != std::string::npos);
}
