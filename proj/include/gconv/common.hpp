#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace gconv {

using Vector = Eigen::VectorXd;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Symmetric 2x2 tensor. One-dimensional problems only use `xx`.
struct SymTensor {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  static SymTensor scalar(double c) { return {c, 0.0, c}; }
  static SymTensor diag(double a, double b) { return {a, 0.0, b}; }

  // A * (gx, gy)
  Point apply(Point g) const { return {xx * g.x + xy * g.y, xy * g.x + yy * g.y}; }
  double quad(Point g) const { return g.x * (xx * g.x + xy * g.y) + g.y * (xy * g.x + yy * g.y); }

  /// Eigenvalues (min, max) in `dim` dimensions.
  std::pair<double, double> eigen_range(int dim) const;
};

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input or configuration; the CLI maps these to exit code 1.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)), detail_(what) {}
  const std::string& key() const { return key_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string key_;
  std::string detail_;
};

/// Oscillation not resolved by the mesh or quadrature (fewer than 16 samples per period).
class ResolutionError : public ConfigError {
 public:
  explicit ResolutionError(const std::string& what) : ConfigError("points_per_period", what) {}
};

/// Numerical failure (breakdown, non-convergence, lost definiteness); exit code 2.
class NumericalError : public Error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Seeded generator whose output is identical on every platform
/// (std distributions are implementation-defined, so they are avoided).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Minimum number of samples per oscillation period for any numerical use of a family.
inline constexpr int kMinSamplesPerPeriod = 16;

}  // namespace gconv
