#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gconv/config.hpp"
#include "gconv/homogenize.hpp"

namespace gconv {

inline constexpr const char* kToolName = "gconv";
inline constexpr const char* kToolVersion = "0.1.0";

/// Least-squares line through (log(1/h), log(err)); err = c/h has slope 1.
struct RateFit {
  std::string label;
  double slope = 0.0;
  double intercept = 0.0;
  int used = 0;     // points entering the fit
  int dropped = 0;  // zero / negative errors left out
  bool ok = false;
  std::string note;

  bool operator==(const RateFit&) const = default;
};

/// Throws ConfigError with fewer than 3 positive errors.
RateFit fit_rate(const std::vector<int>& h, const std::vector<double>& errors, std::string label = "");

/// True when each error is at most `envelope` times the smallest error seen before it.
bool non_increasing(const std::vector<double>& errors, double envelope = 1.2);

/// One CSV row.
struct SweepRow {
  int k = 0;
  double value = 0.0;
  double reference = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;  // abs_err / |reference|; abs_err when the reference is 0

  static SweepRow make(int k, double value, double reference);
  bool operator==(const SweepRow&) const = default;
};

struct SweepPoint {
  int h = 0;
  double delta = 0.0;
  int dofs = 0;
  double wall_seconds = 0.0;
  std::vector<SweepRow> rows;
  json extra = json::object();

  bool operator==(const SweepPoint&) const = default;
};

struct SweepReport {
  std::string kind;
  std::string name;
  json config = json::object();  // resolved config echo
  std::vector<double> reference;   // reference limits (eigenvalues, or norms)
  std::optional<HomogenizedTensor> tensor;
  std::vector<SweepPoint> points;
  std::vector<RateFit> rates;
  json fem_control = nullptr;
  json extra = json::object();
  std::string tool_version = kToolVersion;

  bool operator==(const SweepReport& other) const;
};

/// Eigenvalues of -div(A_h grad) against the homogenized pencil.
SweepReport run_eigen_homog(const ExperimentConfig& config);
/// Dirichlet source problems against the homogenized solution.
SweepReport run_source_homog(const ExperimentConfig& config);
/// Eigenvalues of K0 + V_h against K0 + V.
SweepReport run_eigen_potential(const ExperimentConfig& config);
/// liminf samples on random targets and the affine recovery trace.
SweepReport run_gamma(const ExperimentConfig& config);
/// Energy pairing against a bump and window flux averages.
SweepReport run_divcurl(const ExperimentConfig& config);
/// The effective tensor of the configured family.
SweepReport run_homogenize(const ExperimentConfig& config);
/// Sampled ellipticity bounds for each h; throws ConfigError("family.alpha") on violation.
SweepReport run_validate(const ExperimentConfig& config);

/// Dispatch on config.kind.
SweepReport run_experiment(const ExperimentConfig& config);

/// h,k,value,reference,abs_err,rel_err with 17 significant digits.
std::string report_csv(const SweepReport& report);
json report_to_json(const SweepReport& report);
SweepReport report_from_json(const json& doc);

/// Writes `report_csv` / the JSON document; throws Error on I/O failure.
void emit_report(const SweepReport& report, const std::string& format, const std::string& path);

/// Worker count: `requested` (0 = hardware), capped by GCONV_THREADS and by `tasks`.
int worker_count(int requested, int tasks);

/// Runs task(i) for i in [0, count) on up to `workers` threads. Results are
/// stored by index, so the outcome does not depend on scheduling. The first
/// exception (lowest index) is rethrown.
void parallel_for(int count, int workers, const std::function<void(int)>& task);

}  // namespace gconv
