#pragma once

#include <vector>

namespace gconv {

/// Quadrature on a reference cell. For intervals `points` holds coordinates in
/// [0,1]; for triangles it holds barycentric pairs (l1, l2) with l0 = 1 - l1 - l2.
/// Weights sum to 1 (they are scaled by the cell measure at use sites).
struct QuadratureRule {
  std::vector<double> points;  // 1 entry per point (interval) or 2 (triangle)
  std::vector<double> weights;
  int degree = 0;
  int size() const { return static_cast<int>(weights.size()); }
};

/// n-point Gauss-Legendre rule on [0,1], exact for degree 2n-1.
QuadratureRule gauss_legendre(int n);

/// Interval rule exact to polynomial `degree`.
QuadratureRule interval_rule(int degree);

/// Triangle rule exact to polynomial `degree` (supported up to 5).
QuadratureRule triangle_rule(int degree);

inline constexpr int kDefaultIntervalDegree = 7;  // 4 Gauss points
inline constexpr int kDefaultTriangleDegree = 2;  // 3 points

}  // namespace gconv
