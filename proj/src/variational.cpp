#include "gconv/variational.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "gconv/linalg.hpp"

namespace gconv {

namespace {

constexpr int kSmoothModes = 8;

void require_dims(const QuadraticForm& form, const Vector& u) {
  if (u.size() != form.base.size()) throw ConfigError("", "quadratic form: dimension mismatch");
}

Vector solve_dirichlet(const FeSpace& space, const CoefficientFamily& family, int h, const ScalarField& f) {
  const SparseSymMatrix K = assemble_stiffness(space, family, h);
  return cholesky(K).solve(assemble_load(space, f));
}

// int phi (A grad u) . grad u over the mesh.
double energy_pairing(const FeSpace& space, const CoefficientFamily& family, int h, const Vector& u,
                      const ScalarField& phi) {
  const QuadratureRule rule = cell_rule(space, 0);
  const int stride = space.dimension() == 1 ? 1 : 2;
  const bool one_d = space.dimension() == 1;
  double total = 0.0;
  for (int c = 0; c < space.mesh().cell_count(); ++c) {
    const CellGeometry g = space.geometry(c);
    const Point grad = space.gradient(u, c);
    double part = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      const Point x = g.map(&rule.points[static_cast<std::size_t>(q) * stride]);
      const SymTensor A = family(h, x);
      const double e = one_d ? A.xx * grad.x * grad.x : A.quad(grad);
      part += rule.weights[q] * phi(x) * e;
    }
    total += part * g.measure;
  }
  return total;
}

}  // namespace

SparseSymMatrix QuadraticForm::operator_matrix() const {
  return potential ? combine(1.0, base, 1.0, *potential) : base;
}

double form_eval(const QuadraticForm& form, const Vector& u) {
  require_dims(form, u);
  double value = form.base.form(u);
  if (form.potential) value += form.potential->form(u);
  return value;
}

ContinuityProbe form_continuity_probe(const QuadraticForm& form, const Vector& u, const Vector& v) {
  require_dims(form, u);
  require_dims(form, v);
  const SparseSymMatrix H = form.operator_matrix();
  ContinuityProbe p;
  p.lhs = std::abs(H.form(u) - H.form(v));
  p.rhs = (H * Vector(u + v)).norm() * (u - v).norm();
  p.holds = p.lhs <= p.rhs * (1.0 + 1e-12) + 1e-12;
  return p;
}

double form_lower_bound(const QuadraticForm& form) {
  const int n = form.base.size();
  try {
    return eig_smallest(form.base, SparseSymMatrix::identity(n), 1).values.front();
  } catch (const NumericalError&) {
    return 0.0;  // semidefinite base (natural or periodic space)
  }
}

void PairingTrace::push(int index, double v, double lim) {
  h.push_back(index);
  value.push_back(v);
  limit.push_back(lim);
  abs_error.push_back(std::abs(v - lim));
}

std::string PairingTrace::csv() const {
  std::string out = "h,value,limit,abs_error\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    out += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", h[i], value[i], limit[i], abs_error[i]);
  return out;
}

LiminfReport liminf_check(const FeSpace& space, const SparseSymMatrix& base, const PotentialFamily& family,
                          const std::vector<int>& h_list, const Vector& u_target, double perturbation_scale,
                          std::uint64_t seed) {
  if (h_list.empty()) throw ConfigError("h_list", "empty h list");
  if (!std::is_sorted(h_list.begin(), h_list.end())) throw ConfigError("h_list", "h list must be ascending");
  const int n = space.dofs();
  if (u_target.size() != n || base.size() != n) throw ConfigError("", "liminf_check: dimension mismatch");
  const SparseSymMatrix M = assemble_mass(space);
  const SparseSymMatrix limit_potential = assemble_weighted_mass(space, family.limit);

  LiminfReport r;
  r.limit_value = base.form(u_target) + limit_potential.form(u_target);
  const std::size_t mid = h_list.size() / 2;
  r.tail_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    const int h = h_list[i];
    const SparseSymMatrix V = assemble_mass(space, family, h);
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(h)));
    std::array<double, kSmoothModes + 1> g{};
    for (double& a : g) a = rng.normal();
    // smooth random modes plus one oscillation at the scale of V_h
    const bool two_d = space.dimension() == 2;
    Vector dir = space.interpolate([&](Point x) {
      double s = g[kSmoothModes] * std::sin(2.0 * std::numbers::pi * h * x.x);
      for (int j = 0; j < kSmoothModes; ++j) s += g[j] * std::sin((j + 1) * std::numbers::pi * x.x);
      return two_d ? s * std::sin(std::numbers::pi * x.y) : s;
    });
    dir /= std::sqrt(M.form(dir));
    const Vector u_h = u_target + (perturbation_scale / h) * dir;
    const double value = base.form(u_h) + V.form(u_h);
    r.h.push_back(h);
    r.values.push_back(value);
    if (i >= mid) r.tail_min = std::min(r.tail_min, value);
  }
  r.envelope = std::abs(r.limit_value) / h_list[mid];
  r.pass = r.limit_value <= r.tail_min + 1e-8 + r.envelope;
  return r;
}

PairingTrace recovery_check(const FeSpace& space, const SparseSymMatrix& base, const PotentialFamily& family,
                            const std::vector<int>& h_list, double slope, double intercept) {
  const Vector u = space.interpolate([=](Point x) { return slope * x.x + intercept; });
  if (base.size() != u.size()) throw ConfigError("", "recovery_check: dimension mismatch");
  const double limit = base.form(u) + assemble_weighted_mass(space, family.limit).form(u);
  PairingTrace trace;
  for (int h : h_list) trace.push(h, base.form(u) + assemble_mass(space, family, h).form(u), limit);
  return trace;
}

ScalarField bump(Point center, double half_width) {
  return [=](Point x) {
    const double r = std::hypot(x.x - center.x, x.y - center.y) / half_width;
    if (r >= 1.0) return 0.0;
    const double c = std::cos(0.5 * std::numbers::pi * r);
    return c * c;
  };
}

PairingTrace div_curl_test(const FeSpace& space, const CoefficientFamily& family, const CoefficientFamily& limit,
                           const std::vector<int>& h_list, const SourceFamily& source, const ScalarField& phi) {
  const Vector u_lim = solve_dirichlet(space, limit, 1, source.limit);
  const double lim = energy_pairing(space, limit, 1, u_lim, phi);
  PairingTrace trace;
  for (int h : h_list) {
    const Vector u_h = solve_dirichlet(space, family, h, [&](Point x) { return source(h, x); });
    trace.push(h, energy_pairing(space, family, h, u_h, phi), lim);
  }
  return trace;
}

FluxWindows flux_weak_limit(const FeSpace& space, const CoefficientFamily& family, const CoefficientFamily& limit,
                            int h, const SourceFamily& source, int window_count) {
  const Mesh& mesh = space.mesh();
  const bool one_d = space.dimension() == 1;
  if (window_count < 1 || mesh.nx() % window_count != 0 || (!one_d && mesh.ny() % window_count != 0))
    throw ConfigError("windows", "window count " + std::to_string(window_count) +
                                     " does not divide the mesh into whole cells");
  const Vector u_h = solve_dirichlet(space, family, h, [&](Point x) { return source(h, x); });
  const Vector u_lim = solve_dirichlet(space, limit, 1, source.limit);

  const int nwin = one_d ? window_count : window_count * window_count;
  FluxWindows out;
  out.windows_per_axis = window_count;
  out.flux.assign(nwin, {});
  out.reference.assign(nwin, {});
  out.gradient.assign(nwin, {});
  std::vector<double> measure(nwin, 0.0);
  const QuadratureRule rule = cell_rule(space, 0);
  const int stride = one_d ? 1 : 2;
  const Point lo = mesh.lower(), hi = mesh.upper();
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const CellGeometry g = space.geometry(c);
    Point centroid{0.0, 0.0};
    for (int a = 0; a < g.local_count; ++a) {
      centroid.x += g.nodes[a].x / g.local_count;
      centroid.y += g.nodes[a].y / g.local_count;
    }
    const int wx = std::min(window_count - 1, static_cast<int>((centroid.x - lo.x) / (hi.x - lo.x) * window_count));
    const int wy = one_d ? 0 : std::min(window_count - 1, static_cast<int>((centroid.y - lo.y) / (hi.y - lo.y) * window_count));
    const int w = wy * window_count + wx;
    const Point grad = space.gradient(u_h, c);
    const Point grad_lim = space.gradient(u_lim, c);
    for (int q = 0; q < rule.size(); ++q) {
      const Point x = g.map(&rule.points[static_cast<std::size_t>(q) * stride]);
      const double wq = rule.weights[q] * g.measure;
      const SymTensor A = family(h, x);
      const SymTensor A0 = limit(1, x);
      const Point flux = one_d ? Point{A.xx * grad.x, 0.0} : A.apply(grad);
      const Point ref = one_d ? Point{A0.xx * grad_lim.x, 0.0} : A0.apply(grad_lim);
      out.flux[w].x += wq * flux.x;
      out.flux[w].y += wq * flux.y;
      out.reference[w].x += wq * ref.x;
      out.reference[w].y += wq * ref.y;
    }
    out.gradient[w].x += g.measure * grad.x;
    out.gradient[w].y += g.measure * grad.y;
    measure[w] += g.measure;
  }
  for (int w = 0; w < nwin; ++w) {
    for (Point* p : {&out.flux[w], &out.reference[w], &out.gradient[w]}) {
      p->x /= measure[w];
      p->y /= measure[w];
    }
  }
  return out;
}

}  // namespace gconv
