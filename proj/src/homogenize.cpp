#include "gconv/homogenize.hpp"

#include <algorithm>
#include <cmath>

#include "gconv/assembly.hpp"
#include "gconv/linalg.hpp"
#include "gconv/quadrature.hpp"

namespace gconv {

namespace {

// Composite Gauss sum over [0,1] with `panels` panels.
template <class Fn>
double composite(const Fn& fn, int panels) {
  static const QuadratureRule rule = gauss_legendre(4);
  const double width = 1.0 / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    double part = 0.0;
    for (int q = 0; q < rule.size(); ++q) part += rule.weights[q] * fn((p + rule.points[q]) * width);
    sum += part;
  }
  return sum * width;
}

int panel_count(int quad_points) {
  if (quad_points < 64) throw ConfigError("quad_points", "at least 64 quadrature points per period are required");
  int panels = quad_points / 4;
  return panels + (panels % 2);
}

SymTensor corrected_tensor(const std::function<SymTensor(Point)>& profile, int resolution) {
  auto mesh = std::make_shared<const Mesh>(build_rect_mesh(resolution, resolution, {0.0, 0.0}, {1.0, 1.0}));
  const FeSpace space = build_space(mesh, BoundaryRule::periodic);
  CoefficientFamily cell;
  cell.name = "cell-profile";
  cell.dimension = 2;
  cell.eval = [&profile](int, Point y) { return profile(y); };

  const SparseSymMatrix K = assemble_stiffness(space, cell, 1);
  const QuadratureRule rule = cell_rule(space, 0);
  const int n = space.dofs();

  // Right-hand sides b_i[j] = - int (A e_i) . grad phi_j
  Vector rhs[2] = {Vector::Zero(n), Vector::Zero(n)};
  for (int c = 0; c < mesh->cell_count(); ++c) {
    const CellGeometry g = space.geometry(c);
    for (int q = 0; q < rule.size(); ++q) {
      const SymTensor A = profile(g.map(&rule.points[2 * q]));
      const double w = rule.weights[q] * g.measure;
      const Point col[2] = {{A.xx, A.xy}, {A.xy, A.yy}};
      for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 3; ++a)
          rhs[i][g.dofs[a]] -= w * (col[i].x * g.grads[a].x + col[i].y * g.grads[a].y);
    }
  }

  // Pin dof 0, solve the SPD remainder, then remove the mean.
  const CholeskyFactor factor = cholesky(K.without(0));
  const SparseSymMatrix M = assemble_mass(space);
  const Vector weights = M * Vector::Ones(n);
  Vector chi[2];
  for (int i = 0; i < 2; ++i) {
    const Vector sol = factor.solve(rhs[i].tail(n - 1));
    chi[i] = Vector::Zero(n);
    chi[i].tail(n - 1) = sol;
    chi[i].array() -= weights.dot(chi[i]) / weights.sum();
  }

  // Energy form: mean(A)_ij - chi_i' K chi_j. Quadratic in the corrector,
  // so roundoff in chi barely moves a constant profile.
  // compensated sums; plain accumulation drifts ~1e-12 at 128^2 cells
  double mean[3] = {}, carry[3] = {};
  auto add = [&](int i, double v) {
    const double t = mean[i] + v;
    carry[i] += std::abs(mean[i]) >= std::abs(v) ? (mean[i] - t) + v : (v - t) + mean[i];
    mean[i] = t;
  };
  for (int c = 0; c < mesh->cell_count(); ++c) {
    const CellGeometry g = space.geometry(c);
    for (int q = 0; q < rule.size(); ++q) {
      const SymTensor A = profile(g.map(&rule.points[2 * q]));
      const double w = rule.weights[q] * g.measure;
      add(0, w * A.xx);
      add(1, w * A.xy);
      add(2, w * A.yy);
    }
  }
  for (int i = 0; i < 3; ++i) mean[i] += carry[i];
  const Vector Kchi[2] = {K * chi[0], K * chi[1]};
  double out[2][2] = {{mean[0] - chi[0].dot(Kchi[0]), mean[1] - chi[0].dot(Kchi[1])},
                      {mean[1] - chi[1].dot(Kchi[0]), mean[2] - chi[1].dot(Kchi[1])}};
  return {out[0][0], 0.5 * (out[0][1] + out[1][0]), out[1][1]};
}

}  // namespace

HomogenizedTensor harmonic_mean_1d(const std::function<double(double)>& profile, int quad_points, double alpha) {
  const int panels = panel_count(quad_points);
  auto inverse = [&](double y) {
    const double a = profile(y);
    if (!(a > 0.0) || a < alpha)
      throw ConfigError("family", "profile value " + std::to_string(a) + " at y = " + std::to_string(y) +
                                      " is below the ellipticity bound alpha = " + std::to_string(alpha));
    return 1.0 / a;
  };
  const double coarse = 1.0 / composite(inverse, panels);
  const double fine = 1.0 / composite(inverse, 2 * panels);
  HomogenizedTensor t;
  t.dimension = 1;
  t.value = SymTensor::scalar(fine);
  t.provenance = LimitOracle::closed_form;
  t.error_estimate = std::abs(fine - coarse);
  return t;
}

double arithmetic_mean_1d(const std::function<double(double)>& profile, int quad_points) {
  return composite(profile, 2 * panel_count(quad_points));
}

HomogenizedTensor cell_problem_2d(const std::function<SymTensor(Point)>& profile, int cell_resolution) {
  if (cell_resolution < kMinSamplesPerPeriod)
    throw ResolutionError("cell_resolution " + std::to_string(cell_resolution) + " is below " +
                          std::to_string(kMinSamplesPerPeriod) + " points per period");
  HomogenizedTensor t;
  t.dimension = 2;
  t.provenance = LimitOracle::cell_problem;
  t.value = corrected_tensor(profile, cell_resolution);
  if (cell_resolution / 2 >= kMinSamplesPerPeriod) {
    const SymTensor coarse = corrected_tensor(profile, cell_resolution / 2);
    t.error_estimate = std::max({std::abs(t.value.xx - coarse.xx), std::abs(t.value.xy - coarse.xy),
                                 std::abs(t.value.yy - coarse.yy)});
  }
  return t;
}

HomogenizedTensor homogenize(const CoefficientFamily& family, int cell_resolution) {
  if (family.pieces) throw ConfigError("family", "piecewise families have no single tensor limit; use limit_family");
  const int dim = family.dimension == 2 ? 2 : 1;
  if (!family.oscillatory && family.oracle == LimitOracle::closed_form) {
    HomogenizedTensor t;
    t.dimension = dim;
    t.value = family(1, {0.0, 0.0});
    return t;
  }
  switch (family.oracle) {
    case LimitOracle::closed_form: {
      if (!family.scalar_profile) break;
      HomogenizedTensor t = harmonic_mean_1d(family.scalar_profile, 256, family.alpha);
      if (dim == 2) {
        // laminate a(y1) I: harmonic mean across the layers, arithmetic mean along them
        t.dimension = 2;
        t.value = SymTensor::diag(t.value.xx, arithmetic_mean_1d(family.scalar_profile));
      }
      return t;
    }
    case LimitOracle::cell_problem:
      if (dim == 2 && family.cell_profile) return cell_problem_2d(family.cell_profile, cell_resolution);
      break;
    case LimitOracle::none:
      break;
  }
  throw ConfigError("family", "family '" + family.name + "' has no limit oracle");
}

CoefficientFamily limit_family(const CoefficientFamily& family, int cell_resolution) {
  if (!family.pieces) {
    const HomogenizedTensor t = homogenize(family, cell_resolution);
    return make_constant_tensor_family(t.value, t.dimension);
  }
  std::vector<CoefficientFamily::Piece> pieces;
  for (const auto& p : *family.pieces) pieces.push_back({p.lo, p.hi, limit_family(p.family, cell_resolution)});
  CoefficientFamily f = make_piecewise_family(std::move(pieces));
  f.name = family.name + "-limit";
  return f;
}

LocalityReport locality_check(const CoefficientFamily& piecewise, int subdomain, int h, int points_per_period) {
  if (!piecewise.pieces) throw ConfigError("family", "locality_check needs a piecewise family");
  const auto& pieces = *piecewise.pieces;
  if (subdomain < 0 || subdomain >= static_cast<int>(pieces.size()))
    throw ConfigError("subdomain", "no subdomain " + std::to_string(subdomain));
  const auto& piece = pieces[subdomain];
  LocalityReport r;
  r.lo = piece.lo;
  r.hi = piece.hi;
  r.limit = homogenize(piece.family);

  const double width = piece.hi - piece.lo;
  const int cells = std::max(2, static_cast<int>(std::ceil(width * points_per_period * h - 1e-9)));
  const FeSpace space = build_space(build_interval_mesh(cells, piece.lo, piece.hi), BoundaryRule::natural);
  const SparseSymMatrix K = assemble_stiffness(space, piecewise, h);
  // Dofs of the natural space follow vertex order: 0 and `cells` are the ends.
  const int n = space.dofs();
  const SparseSymMatrix interior = K.without(n - 1).without(0);
  Vector rhs(n - 2);
  for (int i = 1; i < n - 1; ++i) rhs[i - 1] = -K.coeff(i, n - 1);
  const Vector inner = cholesky(interior).solve(rhs);
  Vector u(n);
  u[0] = 0.0;
  u.segment(1, n - 2) = inner;
  u[n - 1] = 1.0;
  r.estimate = width * K.form(u);
  r.abs_error = std::abs(r.estimate - r.limit.value.xx);
  return r;
}

}  // namespace gconv
