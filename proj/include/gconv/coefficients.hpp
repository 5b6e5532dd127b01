#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gconv/common.hpp"

namespace gconv {

/// How the G-limit of a coefficient family is obtained.
enum class LimitOracle { closed_form, cell_problem, none };

const char* to_string(LimitOracle tag);

/// A sequence A_h(x) of symmetric coefficient tensors with declared
/// ellipticity bounds alpha |xi|^2 <= xi.A xi and |A xi| <= beta |xi|.
///
/// Periodic families satisfy A_h(x) = profile(h x); `cell_profile` is then
/// the 1-periodic unit-cell tensor field, and `scalar_profile` its scalar
/// factor when A = a(y1) I.
struct CoefficientFamily {
  struct Piece;

  std::string name;
  int dimension = 0;  // 0: any
  double alpha = 1.0;
  double beta = 1.0;
  LimitOracle oracle = LimitOracle::none;
  bool oscillatory = false;  // period 1/h along x
  Point domain_lo{0.0, 0.0};
  Point domain_hi{1.0, 1.0};
  std::function<SymTensor(int, Point)> eval;
  std::function<SymTensor(Point)> cell_profile;
  std::function<double(double)> scalar_profile;
  std::shared_ptr<const std::vector<Piece>> pieces;

  SymTensor operator()(int h, Point x) const { return eval(h, x); }
  /// Oscillation period at index h, if any.
  std::optional<double> period(int h) const;
};

/// Restriction of a family to the subinterval [lo, hi) of a 1D domain.
struct CoefficientFamily::Piece {
  double lo = 0.0;
  double hi = 1.0;
  CoefficientFamily family;
};

enum class PotentialClass { weak_star_linf, weak_lp };

/// A sequence of nonnegative potentials V_h with its weak (or weak*) limit V.
struct PotentialFamily {
  std::string name;
  PotentialClass cls = PotentialClass::weak_star_linf;
  double exponent = std::numeric_limits<double>::infinity();  // p of the weak-L^p class
  double bound = 0.0;  // sup-norm bound (L-infinity class) or uniform L^p bound
  bool oscillatory = false;
  std::function<double(int, Point)> eval;
  std::function<double(Point)> limit;

  double operator()(int h, Point x) const { return eval(h, x); }
  std::optional<double> period(int h) const;
};

/// Right-hand sides f_h converging strongly to `limit`.
struct SourceFamily {
  std::string name;
  std::function<double(int, Point)> eval;
  std::function<double(Point)> limit;

  double operator()(int h, Point x) const { return eval(h, x); }
};

using Family = std::variant<CoefficientFamily, PotentialFamily, SourceFamily>;

/// Built-in families:
///   osc1d [b, c]            a(y) = b + c sin(2 pi y), 1D
///   twophase1d [p1, p2]     a = p1 on [0,1/2), p2 on [1/2,1) (periodically), 1D
///   laminate2d [p1, p2]     A(y) = a(y1) I with the two-phase profile, 2D
///   laminate2d-osc [b, c]   A(y) = (b + c sin(2 pi y1)) I, 2D
///   const [c]               A = c I, any dimension
///   sin2-potential [amp]    V_h = amp sin^2(2 pi h x), limit amp/2
///   spike-potential [p]     V_h = h^(1/p) on [0, 1/h], limit 0 (weak L^p)
///   const-potential [c]     V_h = c
///   const-source [c]        f_h = c
///   osc-source [c]          f_h = c + sin(2 pi x)/h, limit c
///
/// `alpha`/`beta` override the bounds computed from the parameters; the
/// declared values are what validate_ellipticity checks against.
Family make_builtin_family(const std::string& name, const std::vector<double>& params,
                           std::optional<double> alpha = std::nullopt,
                           std::optional<double> beta = std::nullopt);

CoefficientFamily make_coefficient_family(const std::string& name, const std::vector<double>& params,
                                          std::optional<double> alpha = std::nullopt,
                                          std::optional<double> beta = std::nullopt);
PotentialFamily make_potential_family(const std::string& name, const std::vector<double>& params);
SourceFamily make_source_family(const std::string& name, const std::vector<double>& params);

/// Constant tensor family (used for G-limits).
CoefficientFamily make_constant_tensor_family(const SymTensor& a, int dimension);

/// 1D family defined piecewise on disjoint subintervals. Throws on overlap.
CoefficientFamily make_piecewise_family(std::vector<CoefficientFamily::Piece> pieces);

struct EllipticityReport {
  double alpha = 0.0;
  double beta = 0.0;
  double min_quotient = 0.0;    // min xi.A xi / |xi|^2 over samples
  double max_norm_ratio = 0.0;  // max |A xi| / |xi| over samples
  Point worst_lower{};
  Point worst_upper{};
  int samples = 0;
  bool pass = false;
};

EllipticityReport validate_ellipticity(const CoefficientFamily& family, int h, int sample_count,
                                       std::uint64_t seed);

/// Continuous piecewise-affine function on [knots.front(), knots.back()], zero outside.
struct PiecewiseAffine {
  std::vector<double> knots;
  std::vector<double> values;

  double operator()(double x) const;
  static PiecewiseAffine constant(double c, double lo = 0.0, double hi = 1.0);
  static PiecewiseAffine affine(double slope, double intercept, double lo = 0.0, double hi = 1.0);
};

/// Composite Gauss quadrature over (0,1): `panels` uniform panels of `points` each.
struct CompositeQuadrature {
  int panels = 1024;
  int points = 4;
};

/// Pairings  int_0^1 V_h phi dx  for each test function. Refuses quadratures
/// with fewer than 16 samples per period 1/h.
std::vector<double> weak_limit_estimate(const PotentialFamily& family, int h,
                                        const std::vector<PiecewiseAffine>& test_functions,
                                        CompositeQuadrature quad = {});

/// Pairings  int_0^1 V phi dx  against the limit oracle.
std::vector<double> weak_limit_pairings(const PotentialFamily& family,
                                        const std::vector<PiecewiseAffine>& test_functions,
                                        CompositeQuadrature quad = {});

/// Throws ResolutionError when `spacing` gives fewer than 16 samples per period.
void check_resolution(std::optional<double> period, double spacing, const std::string& what);

}  // namespace gconv
