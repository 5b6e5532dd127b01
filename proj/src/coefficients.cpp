#include "gconv/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gconv/quadrature.hpp"

namespace gconv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double frac(double y) { return y - std::floor(y); }

double param(const std::vector<double>& params, std::size_t i, double fallback) {
  return i < params.size() ? params[i] : fallback;
}

void require_params(const std::string& name, const std::vector<double>& params, std::size_t min_count,
                    std::size_t max_count) {
  if (params.size() < min_count || params.size() > max_count)
    throw ConfigError("params", "family '" + name + "' takes " + std::to_string(min_count) + ".." +
                                    std::to_string(max_count) + " parameters, got " +
                                    std::to_string(params.size()));
}

CoefficientFamily scalar_periodic(std::string name, int dimension, std::function<double(double)> profile,
                                  double lo, double hi) {
  CoefficientFamily f;
  f.name = std::move(name);
  f.dimension = dimension;
  f.alpha = lo;
  f.beta = hi;
  f.oracle = LimitOracle::closed_form;
  f.oscillatory = true;
  f.scalar_profile = profile;
  f.cell_profile = [profile](Point y) { return SymTensor::scalar(profile(y.x)); };
  f.eval = [profile](int h, Point x) { return SymTensor::scalar(profile(h * x.x)); };
  return f;
}

}  // namespace

const char* to_string(LimitOracle tag) {
  switch (tag) {
    case LimitOracle::closed_form: return "closed-form";
    case LimitOracle::cell_problem: return "cell-problem";
    case LimitOracle::none: return "none";
  }
  return "?";
}

std::optional<double> CoefficientFamily::period(int h) const {
  if (!oscillatory) return std::nullopt;
  return 1.0 / h;
}

std::optional<double> PotentialFamily::period(int h) const {
  if (!oscillatory) return std::nullopt;
  return 1.0 / h;
}

Family make_builtin_family(const std::string& name, const std::vector<double>& params,
                           std::optional<double> alpha, std::optional<double> beta) {
  auto finish = [&](CoefficientFamily f) -> Family {
    if (!alpha && !(f.alpha > 0.0))
      throw ConfigError("params", "family '" + name + "' is not elliptic: alpha = " + std::to_string(f.alpha) +
                                      " must be > 0");
    if (alpha) f.alpha = *alpha;
    if (beta) f.beta = *beta;
    if (!(f.alpha > 0.0)) throw ConfigError("alpha", "declared alpha must be > 0");
    if (f.beta < f.alpha) throw ConfigError("beta", "declared beta must be >= alpha");
    return f;
  };

  if (name == "osc1d" || name == "laminate2d-osc") {
    require_params(name, params, 0, 2);
    const double b = param(params, 0, 2.0), c = param(params, 1, 1.0);
    auto profile = [b, c](double y) { return b + c * std::sin(kTwoPi * y); };
    return finish(scalar_periodic(name, name == "osc1d" ? 1 : 2, profile, b - std::abs(c), b + std::abs(c)));
  }
  if (name == "twophase1d" || name == "laminate2d") {
    require_params(name, params, 0, 2);
    const double p1 = param(params, 0, 1.0), p2 = param(params, 1, 4.0);
    auto profile = [p1, p2](double y) { return frac(y) < 0.5 ? p1 : p2; };
    return finish(scalar_periodic(name, name == "twophase1d" ? 1 : 2, profile, std::min(p1, p2), std::max(p1, p2)));
  }
  if (name == "const") {
    require_params(name, params, 0, 1);
    const double c = param(params, 0, 1.0);
    CoefficientFamily f = make_constant_tensor_family(SymTensor::scalar(c), 0);
    f.name = name;
    f.scalar_profile = [c](double) { return c; };
    return finish(std::move(f));
  }
  if (name == "sin2-potential") {
    require_params(name, params, 0, 1);
    const double amp = param(params, 0, 1.0);
    if (amp < 0.0) throw ConfigError("params", "sin2-potential amplitude must be >= 0");
    PotentialFamily v;
    v.name = name;
    v.cls = PotentialClass::weak_star_linf;
    v.bound = amp;
    v.oscillatory = true;
    v.eval = [amp](int h, Point x) {
      const double s = std::sin(kTwoPi * h * x.x);
      return amp * s * s;
    };
    v.limit = [amp](Point) { return 0.5 * amp; };
    return v;
  }
  if (name == "spike-potential") {
    require_params(name, params, 0, 1);
    const double p = param(params, 0, 2.0);
    if (!(p >= 2.0) || !std::isfinite(p)) throw ConfigError("params", "spike-potential exponent p must lie in [2, inf)");
    PotentialFamily v;
    v.name = name;
    v.cls = PotentialClass::weak_lp;
    v.exponent = p;
    v.bound = 1.0;
    v.oscillatory = true;
    v.eval = [p](int h, Point x) { return (x.x >= 0.0 && x.x <= 1.0 / h) ? std::pow(double(h), 1.0 / p) : 0.0; };
    v.limit = [](Point) { return 0.0; };
    return v;
  }
  if (name == "const-potential") {
    require_params(name, params, 0, 1);
    const double c = param(params, 0, 1.0);
    if (c < 0.0) throw ConfigError("params", "const-potential must be >= 0");
    PotentialFamily v;
    v.name = name;
    v.bound = c;
    v.eval = [c](int, Point) { return c; };
    v.limit = [c](Point) { return c; };
    return v;
  }
  if (name == "const-source") {
    require_params(name, params, 0, 1);
    const double c = param(params, 0, 1.0);
    return SourceFamily{name, [c](int, Point) { return c; }, [c](Point) { return c; }};
  }
  if (name == "osc-source") {
    require_params(name, params, 0, 1);
    const double c = param(params, 0, 1.0);
    return SourceFamily{name, [c](int h, Point x) { return c + std::sin(kTwoPi * x.x) / h; },
                        [c](Point) { return c; }};
  }
  throw ConfigError("name", "unknown family '" + name + "'");
}

CoefficientFamily make_coefficient_family(const std::string& name, const std::vector<double>& params,
                                          std::optional<double> alpha, std::optional<double> beta) {
  Family f = make_builtin_family(name, params, alpha, beta);
  if (auto* c = std::get_if<CoefficientFamily>(&f)) return std::move(*c);
  throw ConfigError("name", "'" + name + "' is not a coefficient family");
}

PotentialFamily make_potential_family(const std::string& name, const std::vector<double>& params) {
  Family f = make_builtin_family(name, params);
  if (auto* v = std::get_if<PotentialFamily>(&f)) return std::move(*v);
  throw ConfigError("name", "'" + name + "' is not a potential family");
}

SourceFamily make_source_family(const std::string& name, const std::vector<double>& params) {
  Family f = make_builtin_family(name, params);
  if (auto* s = std::get_if<SourceFamily>(&f)) return std::move(*s);
  throw ConfigError("name", "'" + name + "' is not a source family");
}

CoefficientFamily make_constant_tensor_family(const SymTensor& a, int dimension) {
  CoefficientFamily f;
  f.name = "const-tensor";
  f.dimension = dimension;
  const auto [lo, hi] = a.eigen_range(dimension == 1 ? 1 : 2);
  f.alpha = lo;
  f.beta = hi;
  f.oracle = LimitOracle::closed_form;
  f.eval = [a](int, Point) { return a; };
  f.cell_profile = [a](Point) { return a; };
  return f;
}

CoefficientFamily make_piecewise_family(std::vector<CoefficientFamily::Piece> pieces) {
  if (pieces.empty()) throw ConfigError("pieces", "piecewise family needs at least one piece");
  std::sort(pieces.begin(), pieces.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (!(pieces[i].hi > pieces[i].lo)) throw ConfigError("pieces", "empty subdomain");
    if (pieces[i].family.dimension == 2) throw ConfigError("pieces", "piecewise families are one-dimensional");
    if (i > 0 && pieces[i].lo < pieces[i - 1].hi) throw ConfigError("pieces", "overlapping subdomains");
  }
  CoefficientFamily f;
  f.name = "piecewise";
  f.dimension = 1;
  f.alpha = pieces.front().family.alpha;
  f.beta = pieces.front().family.beta;
  f.oracle = LimitOracle::closed_form;
  for (const auto& p : pieces) {
    f.alpha = std::min(f.alpha, p.family.alpha);
    f.beta = std::max(f.beta, p.family.beta);
    f.oscillatory = f.oscillatory || p.family.oscillatory;
    if (p.family.oracle != LimitOracle::closed_form) f.oracle = p.family.oracle;
  }
  f.domain_lo = {pieces.front().lo, 0.0};
  f.domain_hi = {pieces.back().hi, 0.0};
  auto shared = std::make_shared<const std::vector<CoefficientFamily::Piece>>(std::move(pieces));
  f.pieces = shared;
  f.eval = [shared](int h, Point x) {
    const auto& ps = *shared;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const bool last = i + 1 == ps.size();
      if (x.x >= ps[i].lo && (x.x < ps[i].hi || (last && x.x <= ps[i].hi))) return ps[i].family(h, x);
    }
    throw ConfigError("pieces", "point x = " + std::to_string(x.x) + " lies in no subdomain");
  };
  return f;
}

EllipticityReport validate_ellipticity(const CoefficientFamily& family, int h, int sample_count,
                                       std::uint64_t seed) {
  if (sample_count < 1) throw ConfigError("samples", "sample_count must be >= 1");
  const int dim = family.dimension == 2 ? 2 : 1;
  Rng rng(seed);
  EllipticityReport r;
  r.alpha = family.alpha;
  r.beta = family.beta;
  r.samples = sample_count;
  r.min_quotient = std::numeric_limits<double>::infinity();
  r.max_norm_ratio = 0.0;
  for (int s = 0; s < sample_count; ++s) {
    Point x{rng.uniform(family.domain_lo.x, family.domain_hi.x),
            dim == 2 ? rng.uniform(family.domain_lo.y, family.domain_hi.y) : 0.0};
    Point xi{rng.normal(), dim == 2 ? rng.normal() : 0.0};
    const double n2 = xi.x * xi.x + xi.y * xi.y;
    if (n2 == 0.0) xi = {1.0, 0.0};
    const SymTensor a = family(h, x);
    const double norm2 = xi.x * xi.x + xi.y * xi.y;
    const double q = (dim == 1 ? a.xx * xi.x * xi.x : a.quad(xi)) / norm2;
    const Point axi = dim == 1 ? Point{a.xx * xi.x, 0.0} : a.apply(xi);
    const double ratio = std::sqrt((axi.x * axi.x + axi.y * axi.y) / norm2);
    if (q < r.min_quotient) {
      r.min_quotient = q;
      r.worst_lower = x;
    }
    if (ratio > r.max_norm_ratio) {
      r.max_norm_ratio = ratio;
      r.worst_upper = x;
    }
  }
  r.pass = r.min_quotient >= r.alpha - 1e-12 && r.max_norm_ratio <= r.beta + 1e-12;
  return r;
}

double PiecewiseAffine::operator()(double x) const {
  if (knots.empty() || x < knots.front() || x > knots.back()) return 0.0;
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  if (it == knots.end()) return values.back();
  const std::size_t i = static_cast<std::size_t>(it - knots.begin());
  if (i == 0) return values.front();
  const double t = (x - knots[i - 1]) / (knots[i] - knots[i - 1]);
  return (1.0 - t) * values[i - 1] + t * values[i];
}

PiecewiseAffine PiecewiseAffine::constant(double c, double lo, double hi) { return {{lo, hi}, {c, c}}; }

PiecewiseAffine PiecewiseAffine::affine(double slope, double intercept, double lo, double hi) {
  return {{lo, hi}, {slope * lo + intercept, slope * hi + intercept}};
}

void check_resolution(std::optional<double> period, double spacing, const std::string& what) {
  if (!period) return;
  if (spacing * kMinSamplesPerPeriod > *period * (1.0 + 1e-9))
    throw ResolutionError(what + ": spacing " + std::to_string(spacing) + " gives fewer than " +
                          std::to_string(kMinSamplesPerPeriod) + " samples per period " + std::to_string(*period));
}

namespace {

std::vector<double> integrate_pairings(const std::function<double(double)>& weight,
                                       const std::vector<PiecewiseAffine>& test_functions, CompositeQuadrature quad) {
  const QuadratureRule rule = gauss_legendre(quad.points);
  const double width = 1.0 / quad.panels;
  std::vector<double> out(test_functions.size(), 0.0);
  for (std::size_t t = 0; t < test_functions.size(); ++t) {
    double sum = 0.0;
    for (int p = 0; p < quad.panels; ++p) {
      double panel = 0.0;
      for (int q = 0; q < rule.size(); ++q) {
        const double x = (p + rule.points[q]) * width;
        panel += rule.weights[q] * weight(x) * test_functions[t](x);
      }
      sum += panel * width;
    }
    out[t] = sum;
  }
  return out;
}

}  // namespace

std::vector<double> weak_limit_estimate(const PotentialFamily& family, int h,
                                        const std::vector<PiecewiseAffine>& test_functions, CompositeQuadrature quad) {
  if (quad.panels < 1 || quad.points < 1) throw ConfigError("quad_order", "empty quadrature");
  check_resolution(family.period(h), 1.0 / (static_cast<double>(quad.panels) * quad.points),
                   "weak_limit_estimate at h = " + std::to_string(h));
  return integrate_pairings([&](double x) { return family(h, {x, 0.0}); }, test_functions, quad);
}

std::vector<double> weak_limit_pairings(const PotentialFamily& family,
                                        const std::vector<PiecewiseAffine>& test_functions, CompositeQuadrature quad) {
  return integrate_pairings([&](double x) { return family.limit({x, 0.0}); }, test_functions, quad);
}

}  // namespace gconv
