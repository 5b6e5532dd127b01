#pragma once

#include <functional>

#include "gconv/coefficients.hpp"

namespace gconv {

/// Effective (G-limit) coefficient of a periodic family.
struct HomogenizedTensor {
  int dimension = 1;
  SymTensor value;
  LimitOracle provenance = LimitOracle::closed_form;
  double error_estimate = 0.0;
};

/// (int_0^1 dy / a(y))^-1 by composite 4-point Gauss over one period.
/// The error estimate is the change under doubling the panel count.
/// Throws ConfigError if a sample of the profile falls below `alpha`
/// (or is not positive).
HomogenizedTensor harmonic_mean_1d(const std::function<double(double)>& profile, int quad_points = 256,
                                   double alpha = 0.0);

/// int_0^1 a(y) dy with the same quadrature.
double arithmetic_mean_1d(const std::function<double(double)>& profile, int quad_points = 256);

/// Solves the two periodic corrector problems
///   -div(A(y)(e_i + grad chi_i)) = 0,  chi_i zero-mean,
/// on a `cell_resolution`^2 periodic P1 mesh of the unit cell and returns
/// A*_ij = int (A(y)(e_j + grad chi_j)) . e_i dy, symmetrized.
HomogenizedTensor cell_problem_2d(const std::function<SymTensor(Point)>& profile, int cell_resolution = 128);

/// G-limit of a built-in (non-piecewise) family: closed forms for constant,
/// 1D periodic and laminate families, the cell problem otherwise.
HomogenizedTensor homogenize(const CoefficientFamily& family, int cell_resolution = 128);

/// The limit as a coefficient family (piecewise constant for piecewise families).
CoefficientFamily limit_family(const CoefficientFamily& family, int cell_resolution = 128);

struct LocalityReport {
  double lo = 0.0;
  double hi = 0.0;
  HomogenizedTensor limit;     // G-limit of the standalone family of the piece
  double estimate = 0.0;       // effective coefficient measured on the subdomain at index h
  double abs_error = 0.0;
};

/// Measures the effective coefficient of a piecewise family on one of its
/// subdomains by solving -(a_h u')' = 0 there with u = 0, 1 at the ends
/// (effective coefficient = |omega| * energy) on a mesh with
/// `points_per_period` cells per period 1/h, and compares it with the limit
/// of the standalone family that defines the piece.
LocalityReport locality_check(const CoefficientFamily& piecewise, int subdomain, int h, int points_per_period = 32);

}  // namespace gconv
