#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gconv/assembly.hpp"
#include "gconv/homogenize.hpp"

namespace gconv {

/// F(u) = u' K0 u + u' V u: the quadratic form of H0 + V on a P1 space.
struct QuadraticForm {
  SparseSymMatrix base;
  std::optional<SparseSymMatrix> potential;

  SparseSymMatrix operator_matrix() const;
};

double form_eval(const QuadraticForm& form, const Vector& u);

struct ContinuityProbe {
  double lhs = 0.0;  // |F(u) - F(v)|
  double rhs = 0.0;  // ||(K0 + V)(u + v)|| ||u - v||
  bool holds = false;
};

/// Bound |F(u) - F(v)| <= ||H(u + v)|| ||u - v|| (Euclidean norms).
ContinuityProbe form_continuity_probe(const QuadraticForm& form, const Vector& u, const Vector& v);

/// Smallest eigenvalue of the base matrix (the lambda of F(u) >= lambda |u|^2).
double form_lower_bound(const QuadraticForm& form);

/// h-indexed values of a pairing against its limit.
struct PairingTrace {
  std::vector<int> h;
  std::vector<double> value;
  std::vector<double> limit;
  std::vector<double> abs_error;

  void push(int index, double v, double lim);
  std::string csv() const;  // h,value,limit,abs_error
};

struct LiminfReport {
  std::vector<int> h;
  std::vector<double> values;  // F_h(u_h)
  double limit_value = 0.0;    // F(u) with the limit potential
  double tail_min = 0.0;       // min over h >= h_list[size / 2]
  double envelope = 0.0;       // declared o(1) allowance |F(u)| / h_list[size / 2]
  bool pass = false;
};

/// Samples the liminf inequality F(u) <= liminf F_h(u_h) along
///   u_h = u + scale * r_h / ||r_h||_{L2} / h
/// where r_h is a seeded random combination of sin(j pi x), j = 1..8, and
/// sin(2 pi h x) (times sin(pi y) in 2D), so r_h stays in the space for
/// either boundary rule used here. Passes iff F(u) <= tail_min + 1e-8 + envelope.
LiminfReport liminf_check(const FeSpace& space, const SparseSymMatrix& base, const PotentialFamily& family,
                          const std::vector<int>& h_list, const Vector& u_target, double perturbation_scale,
                          std::uint64_t seed);

/// Constant recovery sequence u_h = u for u(x) = slope * x + intercept:
/// traces |F_h(u) - F(u)|.
PairingTrace recovery_check(const FeSpace& space, const SparseSymMatrix& base, const PotentialFamily& family,
                            const std::vector<int>& h_list, double slope, double intercept);

/// cos^2 bump of the given half width (radial in 2D), C^1 and compactly supported.
ScalarField bump(Point center, double half_width);

/// Solves the Dirichlet problem -div(A_h grad u_h) = f_h on `space` for each h
/// and traces  int phi (A_h grad u_h) . grad u_h  against the same pairing for
/// the homogenized solution.
PairingTrace div_curl_test(const FeSpace& space, const CoefficientFamily& family, const CoefficientFamily& limit,
                           const std::vector<int>& h_list, const SourceFamily& source, const ScalarField& phi);

struct FluxWindows {
  int windows_per_axis = 0;
  std::vector<Point> flux;       // window averages of A_h grad u_h
  std::vector<Point> reference;  // window averages of A grad u
  std::vector<Point> gradient;   // window averages of grad u_h
};

/// Window averages of the discrete flux on a regular partition of the domain
/// into `window_count` intervals (1D) or `window_count`^2 squares (2D).
/// The mesh must have a whole number of cells per window.
FluxWindows flux_weak_limit(const FeSpace& space, const CoefficientFamily& family, const CoefficientFamily& limit,
                            int h, const SourceFamily& source, int window_count);

}  // namespace gconv
