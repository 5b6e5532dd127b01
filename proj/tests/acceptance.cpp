// Acceptance run: one PASS/FAIL line per criterion A1..A10.
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "gconv/linalg.hpp"
#include "gconv/quadrature.hpp"
#include "gconv/sweep.hpp"
#include "gconv/variational.hpp"

using namespace gconv;
namespace fs = std::filesystem;

namespace {

const double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!! ") + what;
  }
};

ExperimentConfig load(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return load_config((fs::path(GCONV_CONFIG_DIR) / name).string(), overrides);
}

double max_rel(const SweepPoint& p) {
  double w = 0.0;
  for (const auto& r : p.rows) w = std::max(w, r.rel_err);
  return w;
}

std::vector<double> max_rel_ladder(const SweepReport& r) {
  std::vector<double> out;
  for (const auto& p : r.points) out.push_back(max_rel(p));
  return out;
}

bool ascending_positive(const SweepReport& r) {
  for (const auto& p : r.points)
    for (std::size_t k = 0; k < p.rows.size(); ++k)
      if (!(p.rows[k].value > 0.0) || (k > 0 && p.rows[k].value < p.rows[k - 1].value)) return false;
  return true;
}

double fem_eigenvalue(int j, double d) {
  const double c = std::cos(j * kPi * d);
  return 6.0 / (d * d) * (1.0 - c) / (2.0 + c);
}

double integrate01(const std::function<double(double)>& f, int panels = 4096) {
  const QuadratureRule r = gauss_legendre(6);
  double s = 0.0;
  for (int p = 0; p < panels; ++p)
    for (int q = 0; q < r.size(); ++q) s += r.weights[q] * f((p + r.points[q]) / panels) / panels;
  return s;
}

Vector random_vector(int n, Rng& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

// ---------------------------------------------------------------------------

Outcome a1() {
  Outcome o;
  auto osc = [](double y) { return 2.0 + std::sin(2.0 * kPi * y); };
  double worst = 0.0;
  for (int q : {64, 256, 1024, 4096}) worst = std::max(worst, std::abs(harmonic_mean_1d(osc, q).value.xx - std::sqrt(3.0)));
  o.require(worst <= 1e-10, fmt::format("|A* - sqrt3| = {:.2e} <= 1e-10 over 64..4096 points", worst));
  const double two = harmonic_mean_1d([](double y) { return y - std::floor(y) < 0.5 ? 1.0 : 4.0; }).value.xx;
  o.require(std::abs(two - 1.6) <= 1e-12, fmt::format("two-phase |A* - 1.6| = {:.2e} <= 1e-12", std::abs(two - 1.6)));
  return o;
}

Outcome a2() {
  Outcome o;
  double worst = 0.0;
  for (int n : {3, 31, 255}) {
    const int cells = n + 1;
    const FeSpace s = build_space(build_interval_mesh(cells, 0, 1), BoundaryRule::dirichlet_zero);
    const int k = std::min(5, n);
    const EigenResult r = eig_smallest(assemble_laplacian(s), assemble_mass(s), k);
    for (int j = 1; j <= k; ++j) {
      const double exact = fem_eigenvalue(j, 1.0 / cells);
      worst = std::max(worst, std::abs(r.values[j - 1] - exact) / exact);
    }
  }
  o.require(worst <= 1e-10, fmt::format("closed form max rel err {:.2e} <= 1e-10 (n = 3, 31, 255; j <= 5)", worst));
  const FeSpace s = build_space(build_interval_mesh(4, 0, 1), BoundaryRule::dirichlet_zero);
  const SparseSymMatrix K = assemble_laplacian(s), M = assemble_mass(s);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense{Eigen::MatrixXd(K.matrix()), Eigen::MatrixXd(M.matrix())};
  const EigenResult r = eig_smallest(K, M, 3);
  double dw = 0.0;
  for (int j = 0; j < 3; ++j) dw = std::max(dw, std::abs(r.values[j] - dense.eigenvalues()[j]) / dense.eigenvalues()[j]);
  o.require(dw <= 1e-10, fmt::format("n=3 dense brute force rel err {:.2e}", dw));
  return o;
}

Outcome a3(std::vector<SweepReport>& eigen_reports) {
  Outcome o;
  const SweepReport r = run_eigen_homog(load("a3_osc1d.json"));
  eigen_reports.push_back(r);
  const auto ladder = max_rel_ladder(r);
  const SweepPoint& last = r.points.back();
  o.require(last.h == 64 && ladder.back() <= 2e-2, fmt::format("rel err at h={} is {:.2e} <= 2e-2", last.h, ladder.back()));
  o.require(non_increasing(ladder, 1.2), "non-increasing over the ladder (envelope 1.2)");
  double vec = 0.0;
  for (double e : last.extra["vector_error"]) vec = std::max(vec, e);
  o.require(vec <= 5e-2, fmt::format("eigenvector L2 err {:.2e} <= 5e-2", vec));
  // secondary oracle: sqrt3 pi^2 from the closed-form limit
  const double lam = std::sqrt(3.0) * kPi * kPi;
  o.require(std::abs(r.reference[0] - lam) <= 1e-3 * lam, fmt::format("reference {:.6f} vs sqrt3 pi^2 {:.6f}", r.reference[0], lam));
  o.detail += fmt::format("; slopes {:.2f} {:.2f} {:.2f} (reported only)", r.rates[0].slope, r.rates[1].slope, r.rates[2].slope);
  return o;
}

Outcome a4() {
  Outcome o;
  const HomogenizedTensor t = cell_problem_2d(
      [](Point y) { return SymTensor::scalar(y.x - std::floor(y.x) < 0.5 ? 1.0 : 4.0); }, 128);
  const double ex = std::abs(t.value.xx - 1.6) / 1.6, ey = std::abs(t.value.yy - 2.5) / 2.5;
  o.require(ex <= 1e-2 && ey <= 1e-2 && std::abs(t.value.xy) <= 1e-2,
            fmt::format("laminate diag({:.6f}, {:.6f}) rel err {:.1e}, {:.1e} <= 1e-2", t.value.xx, t.value.yy, ex, ey));
  const HomogenizedTensor c = cell_problem_2d([](Point) { return SymTensor::scalar(3.7); }, 128);
  const double ec = std::max({std::abs(c.value.xx - 3.7), std::abs(c.value.yy - 3.7), std::abs(c.value.xy)});
  o.require(ec <= 1e-12, fmt::format("constant profile err {:.1e} <= 1e-12", ec));
  return o;
}

Outcome a5(std::vector<SweepReport>& eigen_reports) {
  Outcome o;
  const SweepReport r = run_eigen_potential(load("a5_sin2.json"));
  eigen_reports.push_back(r);
  const auto ladder = max_rel_ladder(r);
  o.require(r.points.back().h == 64 && ladder.back() <= 2e-2, fmt::format("rel err at h=64 is {:.2e} <= 2e-2", ladder.back()));
  o.require(non_increasing(ladder, 1.2), "non-increasing (envelope 1.2)");
  double sec = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double cont = kPi * kPi * (k + 1) * (k + 1) + 0.5;
    sec = std::max(sec, std::abs(r.reference[k] - cont) / cont);
  }
  o.require(sec <= 1e-3, fmt::format("reference vs pi^2 k^2 + 1/2: rel {:.1e}", sec));
  return o;
}

Outcome a6(std::vector<SweepReport>& eigen_reports) {
  Outcome o;
  const SweepReport r = run_eigen_potential(load("a6_spike.json"));
  eigen_reports.push_back(r);
  const double rel = r.points.back().rows[0].rel_err;
  o.require(r.points.back().h == 128 && rel <= 1e-3, fmt::format("rel err at h=128 is {:.2e} <= 1e-3", rel));
  // the reference is the unperturbed discrete Laplacian on the finest mesh
  const double exact = fem_eigenvalue(1, 1.0 / (32 * 128));
  o.require(std::abs(r.reference[0] - exact) <= 1e-10 * exact, "reference equals the closed-form K0 eigenvalue");
  return o;
}

Outcome a7() {
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> families = {
      {"sin2-potential", "[1]"}, {"spike-potential", "[2]"}, {"const-potential", "[1]"}};
  for (const auto& [name, params] : families) {
    const SweepReport r = run_gamma(load("a7_gamma.json", {"potential.name=" + name, "potential.params=" + params}));
    int passed = 0;
    for (const auto& l : r.extra["liminf"]) passed += l["pass"].get<bool>();
    const auto& rec = r.extra["recovery"];
    const int targets = static_cast<int>(r.extra["liminf"].size());
    o.require(passed == targets && targets == 20, fmt::format("{}: liminf {}/{}", name, passed, targets));
    o.require(r.points.back().h == 256 && rec["pass"].get<bool>(),
              fmt::format("recovery {:.1e} <= {:.1e}", rec["final_abs_error"].get<double>(), rec["bound"].get<double>()));
  }
  return o;
}

Outcome a8() {
  Outcome o;
  const ExperimentConfig c = load("a8_divcurl.json");
  const SweepReport r = run_divcurl(c);
  const ScalarField phi = bump({c.test_center, 0.0}, c.test_half_width);
  const double A = std::sqrt(3.0);
  const double exact = integrate01([&](double x) {
    const double du = (1.0 - 2.0 * x) / (2.0 * A);
    return phi({x, 0.0}) * A * du * du;
  });
  const double rel = std::abs(r.points.back().rows[0].value - exact) / exact;
  o.require(r.points.back().h == 64 && rel <= 2e-2, fmt::format("pairing rel err vs closed form {:.2e} <= 2e-2", rel));
  const auto& env = r.extra["envelope"];
  o.require(env["pass"].get<bool>(), fmt::format("h=64 err {:.2e} <= 3 x {:.2e} (1/h envelope from h=8..32)",
                                                 env["observed"].get<double>(), env["predicted"].get<double>()));
  return o;
}

Outcome a9() {
  Outcome o;
  const SweepReport r = run_source_homog(load("a9_source.json"));
  const double rel = r.points.back().rows[0].rel_err;
  o.require(r.points.back().h == 64 && rel <= 2e-2, fmt::format("L2 rel err at h=64 is {:.2e} <= 2e-2", rel));
  // ||x(1-x)/(2 sqrt3)||_2 = sqrt(1/360)
  const double norm = std::sqrt(1.0 / 360.0);
  o.require(std::abs(r.reference[0] - norm) <= 1e-5 * norm,
            fmt::format("reference norm {:.8f} vs closed form {:.8f}", r.reference[0], norm));
  return o;
}

Outcome a10(const std::vector<SweepReport>& eigen_reports) {
  Outcome o;
  Rng rng(2024);

  // ellipticity sandwich
  bool sandwich = true;
  for (const auto& [name, params, dim, h] : std::vector<std::tuple<std::string, std::vector<double>, int, int>>{
           {"osc1d", {2, 1}, 1, 8}, {"twophase1d", {1, 4}, 1, 8}, {"laminate2d", {1, 4}, 2, 2},
           {"laminate2d-osc", {2, 1}, 2, 2}, {"const", {3}, 1, 1}}) {
    const CoefficientFamily f = make_coefficient_family(name, params);
    const FeSpace s = dim == 1 ? build_space(build_interval_mesh(256, 0, 1), BoundaryRule::dirichlet_zero)
                               : build_space(build_rect_mesh(32, 32, {0, 0}, {1, 1}), BoundaryRule::dirichlet_zero);
    const SparseSymMatrix K = assemble_stiffness(s, f, h), K1 = assemble_laplacian(s);
    for (int t = 0; t < 100; ++t) {
      const Vector u = random_vector(s.dofs(), rng);
      sandwich = sandwich && f.alpha * K1.form(u) <= K.form(u) * (1 + 1e-10) &&
                 K.form(u) <= f.beta * K1.form(u) * (1 + 1e-10);
    }
  }
  o.require(sandwich, "ellipticity sandwich");

  // M-orthonormality
  const FeSpace s2 = build_space(build_rect_mesh(32, 32, {0, 0}, {1, 1}), BoundaryRule::dirichlet_zero);
  const SparseSymMatrix M2 = assemble_mass(s2);
  const EigenResult e2 = eig_smallest(assemble_stiffness(s2, make_coefficient_family("laminate2d", {1, 4}), 2), M2, 5);
  const double orth = (e2.vectors.transpose() * (M2.matrix() * e2.vectors) - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff();
  o.require(orth <= 1e-10, fmt::format("M-orthonormality {:.1e}", orth));

  bool chain = true;
  for (const auto& r : eigen_reports) chain = chain && ascending_positive(r);
  for (int j = 1; j < e2.count(); ++j) chain = chain && e2.values[j - 1] > 0.0 && e2.values[j] >= e2.values[j - 1];
  o.require(chain, "eigenvalues positive and ascending");

  // continuity bound on 1000 random pairs
  const FeSpace s1 = build_space(build_interval_mesh(512, 0, 1), BoundaryRule::dirichlet_zero);
  QuadraticForm F{assemble_laplacian(s1), assemble_mass(s1, make_potential_family("sin2-potential", {1}), 8)};
  int held = 0;
  for (int t = 0; t < 1000; ++t)
    held += form_continuity_probe(F, random_vector(s1.dofs(), rng), random_vector(s1.dofs(), rng)).holds;
  o.require(held == 1000, fmt::format("continuity bound {}/1000", held));

  // locality on the piecewise family
  const CoefficientFamily pw = build_coefficient_family(load("piecewise_locality.json").family);
  double loc = 0.0;
  for (int piece = 0; piece < 2; ++piece) {
    const LocalityReport l = locality_check(pw, piece, 64);
    loc = std::max(loc, l.abs_error / l.limit.value.xx);
  }
  o.require(loc <= 2e-3, fmt::format("locality rel err {:.1e} <= 2e-3", loc));

  // determinism of every example config
  int identical = 0, total = 0;
  for (const auto& entry : fs::directory_iterator(GCONV_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++total;
    auto once = [&] {
      try {
        return report_csv(run_experiment(load_config(entry.path().string())));
      } catch (const Error& e) {
        return std::string("error: ") + e.what();
      }
    };
    identical += once() == once();
  }
  o.require(identical == total && total > 0, fmt::format("bitwise identical CSV on {}/{} configs", identical, total));
  return o;
}

}  // namespace

int main() {
  std::vector<SweepReport> eigen_reports;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1 harmonic mean", a1},
      {"A2 generalized eigensolver", a2},
      {"A3 eigenvalue homogenization", [&] { return a3(eigen_reports); }},
      {"A4 cell problem", a4},
      {"A5 sin2 potential", [&] { return a5(eigen_reports); }},
      {"A6 spike potential", [&] { return a6(eigen_reports); }},
      {"A7 gamma diagnostics", a7},
      {"A8 div-curl pairing", a8},
      {"A9 source homogenization", a9},
      {"A10 invariants", [&] { return a10(eigen_reports); }},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << "\n" << std::flush;
  }
  std::cout << (failed == 0 ? "all criteria passed\n" : fmt::format("{} criteria failed\n", failed));
  return failed == 0 ? 0 : 1;
}
