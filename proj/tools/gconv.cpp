// gconv: command-line driver for the convergence sweeps.
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gconv/sweep.hpp"

namespace fs = std::filesystem;
using namespace gconv;

namespace {

struct Invocation {
  std::string subcommand;
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  int verbosity = 0;
};

const std::map<std::string, std::pair<std::string, std::string>>& subcommands() {
  static const std::map<std::string, std::pair<std::string, std::string>> table = {
      {"sweep-eigen", {"eigen-homog", "eigenvalue homogenization sweep over h"}},
      {"sweep-source", {"source-homog", "source-problem homogenization sweep over h"}},
      {"sweep-potential", {"eigen-potential", "eigenvalues of the Laplacian plus an oscillating potential"}},
      {"homogenize", {"homogenize", "effective tensor of the configured coefficient family"}},
      {"gamma-check", {"gamma", "liminf samples and affine recovery traces for a potential family"}},
      {"divcurl", {"divcurl", "energy pairing against a bump and window flux averages"}},
      {"validate", {"validate", "sampled ellipticity and boundedness check of the family"}},
  };
  return table;
}

std::string resolve(const std::string& dir, const std::string& file) {
  const fs::path p(file);
  return p.is_absolute() ? p.string() : (fs::path(dir) / p).string();
}

void print_summary(const SweepReport& r, int verbosity) {
  if (r.tensor)
    std::cout << fmt::format("effective tensor: xx={:.12g} xy={:.12g} yy={:.12g} ({})\n", r.tensor->value.xx,
                             r.tensor->value.xy, r.tensor->value.yy, to_string(r.tensor->provenance));
  for (const auto& p : r.points) {
    double worst = 0.0;
    for (const auto& row : p.rows) worst = std::max(worst, row.rel_err);
    std::cout << fmt::format("h={:<5} dofs={:<8} max rel_err={:.3e}\n", p.h, p.dofs, worst);
    if (verbosity > 0)
      for (const auto& row : p.rows)
        std::cout << fmt::format("    k={:<3} value={:.12g} reference={:.12g} rel_err={:.3e}\n", row.k, row.value,
                                 row.reference, row.rel_err);
  }
  for (const auto& f : r.rates)
    if (f.ok) std::cout << fmt::format("rate {}: slope {:.3f}\n", f.label, f.slope);
}

int run(const Invocation& inv) {
  std::vector<std::string> overrides = {"kind=" + subcommands().at(inv.subcommand).first};
  overrides.insert(overrides.end(), inv.overrides.begin(), inv.overrides.end());
  const ExperimentConfig config = load_config(inv.config_path, overrides);
  const SweepReport report = run_experiment(config);

  fs::create_directories(inv.out_dir);
  const std::string csv = resolve(inv.out_dir, config.csv_path);
  const std::string js = resolve(inv.out_dir, config.json_path);
  emit_report(report, "csv", csv);
  emit_report(report, "json", js);
  print_summary(report, inv.verbosity);
  std::cout << "wrote " << csv << " and " << js << "\n";

  if (report.kind == "gamma" && !report.extra.value("pass", false))
    throw NumericalError("gamma", "liminf or recovery check failed (see " + js + ")");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gconv: G- and Gamma-convergence sweeps for P1 finite elements"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 1 config or validation error, 2 numerical failure.\n"
             "GCONV_THREADS caps the number of worker threads.");

  Invocation inv;
  for (const auto& [name, info] : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, info.second);
    sub->add_option("--config,-c", inv.config_path, "experiment config (JSON)")->required();
    sub->add_option("--out,-o", inv.out_dir, "output directory")->capture_default_str();
    sub->add_option("--set,-s", inv.overrides, "override a config key: dotted.key=value")->take_all();
    sub->add_flag("-v,--verbose", inv.verbosity, "print every row");
    sub->footer(schema_help());
    sub->callback([&inv, n = name] { inv.subcommand = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    return run(inv);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure in stage '" << e.stage() << "': " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure in stage 'internal': " << e.what() << "\n";
    return 2;
  }
}
