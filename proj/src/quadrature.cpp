#include "gconv/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "gconv/common.hpp"

namespace gconv {

QuadratureRule gauss_legendre(int n) {
  if (n < 1 || n > 64) throw ConfigError("quad_order", "Gauss-Legendre point count must be in [1, 64]");
  QuadratureRule rule;
  rule.degree = 2 * n - 1;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map [-1,1] -> [0,1], ascending
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

QuadratureRule interval_rule(int degree) {
  if (degree < 0) throw ConfigError("quad_order", "quadrature degree must be non-negative");
  if (degree < 1) degree = 1;
  return gauss_legendre((degree + 2) / 2);
}

QuadratureRule triangle_rule(int degree) {
  QuadratureRule r;
  if (degree <= 1) {
    r.points = {1.0 / 3.0, 1.0 / 3.0};
    r.weights = {1.0};
    r.degree = 1;
  } else if (degree == 2) {
    r.points = {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0};
    r.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    r.degree = 2;
  } else if (degree <= 4) {
    // Dunavant degree 4
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    const double b1 = 1.0 - 2.0 * a1, b2 = 1.0 - 2.0 * a2;
    r.points = {a1, a1, b1, a1, a1, b1, a2, a2, b2, a2, a2, b2};
    r.weights = {w1, w1, w1, w2, w2, w2};
    r.degree = 4;
  } else if (degree == 5) {
    const double a1 = 0.470142064105115, w1 = 0.132394152788506;
    const double a2 = 0.101286507323456, w2 = 0.125939180544827;
    const double b1 = 1.0 - 2.0 * a1, b2 = 1.0 - 2.0 * a2;
    r.points = {1.0 / 3.0, 1.0 / 3.0, a1, a1, b1, a1, a1, b1, a2, a2, b2, a2, a2, b2};
    r.weights = {0.225, w1, w1, w1, w2, w2, w2};
    r.degree = 5;
  } else {
    throw ConfigError("quad_order", "triangle rules are available up to degree 5");
  }
  return r;
}

}  // namespace gconv
