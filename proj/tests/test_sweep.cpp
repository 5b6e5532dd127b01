#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gconv/sweep.hpp"

using namespace gconv;

namespace {

const double kPi = std::numbers::pi;

ExperimentConfig config(const std::vector<std::string>& overrides) { return parse_config(json::object(), overrides); }

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("fit_rate on exact power laws") {
  const std::vector<int> h = {4, 8, 16, 32};
  std::vector<double> e1, e2, e0;
  for (int x : h) {
    e1.push_back(3.0 / x);
    e2.push_back(0.5 / (double(x) * x));
    e0.push_back(0.2);
  }
  CHECK(fit_rate(h, e1).slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit_rate(h, e2).slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit_rate(h, e0).slope == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(std::exp(fit_rate(h, e1).intercept) == doctest::Approx(3.0));
  std::vector<double> with_zero = e1;
  with_zero[1] = 0.0;
  const RateFit f = fit_rate(h, with_zero);
  CHECK(f.dropped == 1);
  CHECK(f.used == 3);
  CHECK_FALSE(f.note.empty());
  with_zero[2] = 0.0;
  CHECK_THROWS_AS(fit_rate(h, with_zero), ConfigError);
}

TEST_CASE("non_increasing with an envelope") {
  CHECK(non_increasing({1.0, 0.5, 0.55, 0.2}, 1.2));
  CHECK_FALSE(non_increasing({1.0, 0.5, 0.7}, 1.2));
  CHECK(non_increasing({}, 1.2));
}

TEST_CASE("csv emission") {
  SweepReport empty;
  CHECK(report_csv(empty) == "h,k,value,reference,abs_err,rel_err\n");
  SweepReport r;
  for (int h : {4, 8, 16}) {
    SweepPoint p;
    p.h = h;
    p.rows = {SweepRow::make(1, 1.0 + 1.0 / h, 1.0), SweepRow::make(2, 4.0 + 1.0 / h, 4.0)};
    r.points.push_back(p);
  }
  const std::string csv = report_csv(r);
  CHECK(count_lines(csv) == 7);
  // 17 significant digits
  CHECK(csv.find("4,1,1.25,1,0.25,0.25\n") != std::string::npos);
  CHECK(csv.find("16,2,4.0625,4,0.0625,0.015625\n") != std::string::npos);
  const SweepRow z = SweepRow::make(1, 0.5, 0.0);
  CHECK(z.rel_err == 0.5);
}

TEST_CASE("eigen sweeps with constant and two-phase families") {
  const SweepReport c = run_eigen_homog(config({"family.name=const", "family.params=[2]", "h_list=[1,2,4]",
                                                "eigen_count=2", "points_per_period=16"}));
  // h-independent family: each point is c times the FEM Laplacian eigenvalue on its own mesh
  for (const auto& p : c.points) {
    const double d = 1.0 / (16 * p.h);
    const double lam1 = 6.0 / (d * d) * (1 - std::cos(kPi * d)) / (2 + std::cos(kPi * d));
    CHECK(p.rows[0].value == doctest::Approx(2.0 * lam1).epsilon(1e-10));
  }
  CHECK(c.points.back().rows[0].abs_err <= 1e-9 * c.points.back().rows[0].value);

  const SweepReport t = run_eigen_homog(config({"family.name=twophase1d", "family.params=[1,4]",
                                                "h_list=[4,8,16,32]"}));
  const double expected[] = {15.791, 63.165, 142.12};
  for (int k = 0; k < 3; ++k) {
    CHECK(t.reference[k] == doctest::Approx(expected[k]).epsilon(2e-3));
    CHECK(t.reference[k] == doctest::Approx(1.6 * (k + 1) * (k + 1) * kPi * kPi).epsilon(1e-3));
  }
  for (const auto& p : t.points)
    for (int k = 1; k < 3; ++k) CHECK(p.rows[k].value > p.rows[k - 1].value);
  CHECK(t.tensor->value.xx == doctest::Approx(1.6));
}

TEST_CASE("osc1d eigenvalue near sqrt3 pi^2") {
  const SweepReport r = run_eigen_homog(config({"h_list=[16,32,64]", "eigen_count=1"}));
  CHECK(r.points.back().rows[0].value == doctest::Approx(std::sqrt(3.0) * kPi * kPi).epsilon(2e-3));
  CHECK(r.rates.size() == 1);
  CHECK(r.rates[0].ok);
}

TEST_CASE("source sweep, oscillating source has the same limit") {
  const SweepReport a = run_source_homog(config({"h_list=[4,8,16,32,64]"}));
  const SweepReport b = run_source_homog(config({"h_list=[4,8,16,32,64]", "source.name=osc-source"}));
  CHECK(a.reference == b.reference);
  CHECK(b.points.back().rows[0].rel_err <= 2e-2);
  CHECK(b.points.back().rows[0].rel_err < b.points.front().rows[0].rel_err);
  for (const auto& p : a.points) CHECK(p.extra["a_priori_ok"].get<bool>());

  const SweepReport c = run_source_homog(config({"family.name=const", "family.params=[3]", "h_list=[4,8,16]"}));
  for (const auto& p : c.points) CHECK(p.rows[0].rel_err <= 1e-3);
}

TEST_CASE("potential sweeps") {
  const SweepReport s = run_eigen_potential(config({"kind=eigen-potential", "h_list=[4,8,16,32,64]"}));
  const double expected[] = {10.3696, 39.978, 89.326};
  for (int k = 0; k < 3; ++k) CHECK(s.reference[k] == doctest::Approx(expected[k]).epsilon(2e-3));
  // residual of the limit pairs shrinks with h
  for (int k = 0; k < 3; ++k)
    CHECK(s.points.back().extra["limit_residual"][k].get<double>() <
          s.points.front().extra["limit_residual"][k].get<double>() / 10);

  const SweepReport c = run_eigen_potential(
      config({"potential.name=const-potential", "potential.params=[3]", "h_list=[2,4,8]", "eigen_count=2"}));
  // the finest point sits on the reference mesh
  CHECK(c.points.back().rows[0].abs_err <= 1e-9 * c.reference[0]);

  const SweepReport p = run_eigen_potential(
      config({"potential.name=spike-potential", "potential.params=[2]", "h_list=[8,16,32,64,128]", "eigen_count=1"}));
  CHECK(p.reference[0] == doctest::Approx(kPi * kPi).epsilon(1e-4));
  CHECK(p.points.back().rows[0].rel_err <= 1e-3);
  // decay close to h^(-5/2)
  CHECK(p.rates[0].slope == doctest::Approx(2.5).epsilon(0.1));
}

TEST_CASE("2D eigen sweep on a laminate") {
  const SweepReport r = run_eigen_homog(config({"dimension=2", "family.name=laminate2d", "family.params=[1,4]",
                                                "h_list=[1,2,4]", "points_per_period=16", "eigen_count=3"}));
  // limit diag(1.6, 2.5): lambda = pi^2 (1.6 i^2 + 2.5 j^2)
  CHECK(r.reference[0] == doctest::Approx(kPi * kPi * 4.1).epsilon(1e-2));
  CHECK(r.reference[1] == doctest::Approx(kPi * kPi * (1.6 * 4 + 2.5)).epsilon(1e-2));
  CHECK(r.points.back().rows[0].rel_err <= 2e-2);
}

TEST_CASE("resolution and size limits") {
  CHECK_THROWS_AS(run_eigen_homog(config({"solver.max_dofs=100"})), ConfigError);
  CHECK_THROWS_AS(run_eigen_homog(config({"family.name=laminate2d", "family.params=[1,4]"})), ConfigError);
}

TEST_CASE("ellipticity violations inside a sweep are numerical failures") {
  try {
    run_eigen_homog(config({"family.params=[1,2]", "family.alpha=0.5", "family.beta=3", "h_list=[1,2,4]"}));
    FAIL("expected failure");
  } catch (const NumericalError& e) {
    CHECK(e.stage() == "ellipticity");
  }
  try {
    run_validate(config({"kind=validate", "family.params=[1,2]", "family.alpha=0.5", "family.beta=3"}));
    FAIL("expected failure");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "family.alpha");
    CHECK(std::string(e.what()).find("ellipticity") != std::string::npos);
  }
  const SweepReport ok = run_validate(config({"kind=validate"}));
  CHECK(ok.points.size() == 5);
}

TEST_CASE("homogenize and divcurl runners") {
  const SweepReport h = run_homogenize(
      config({"kind=homogenize", "dimension=2", "family.name=laminate2d", "family.params=[1,4]"}));
  CHECK(h.tensor->value.xx == doctest::Approx(1.6));
  CHECK(h.tensor->value.yy == doctest::Approx(2.5));
  for (const auto& row : h.points[0].rows) CHECK(row.rel_err <= 2e-3);

  const SweepReport d = run_divcurl(config({"kind=divcurl", "h_list=[8,16,32,64]"}));
  CHECK(d.points.back().rows[0].rel_err <= 2e-2);
  CHECK(d.extra["envelope"]["pass"].get<bool>());
  CHECK(d.extra["flux_windows"]["max_abs_error"].get<double>() <= 1e-2);
}

TEST_CASE("gamma runner") {
  const SweepReport g = run_gamma(config({"kind=gamma", "gamma.targets=5", "h_list=[4,16,64,256]"}));
  CHECK(g.extra["pass"].get<bool>());
  CHECK(g.points.size() == 4);
  CHECK(g.points[0].rows.size() == 6);
}

TEST_CASE("json round trip and determinism") {
  const ExperimentConfig c = config({"h_list=[4,8,16]", "fem_control=true"});
  const SweepReport a = run_eigen_homog(c);
  const SweepReport back = report_from_json(json::parse(report_to_json(a).dump()));
  CHECK(back == a);
  const SweepReport b = run_eigen_homog(c);
  CHECK(report_csv(a) == report_csv(b));
  // the echoed config reproduces the run
  const SweepReport again = run_eigen_homog(parse_config(report_to_json(a)));
  CHECK(report_csv(again) == report_csv(a));
  const SweepReport g = run_gamma(config({"kind=gamma", "gamma.targets=3", "h_list=[4,8,16]"}));
  CHECK(report_from_json(json::parse(report_to_json(g).dump())) == g);
}

TEST_CASE("thread count does not change results") {
  const ExperimentConfig one = config({"h_list=[4,8,16,32]", "threads=1"});
  const ExperimentConfig four = config({"h_list=[4,8,16,32]", "threads=4"});
  CHECK(report_csv(run_eigen_homog(one)) == report_csv(run_eigen_homog(four)));
  CHECK(worker_count(3, 10) == 3);
  CHECK(worker_count(8, 2) == 2);
  CHECK(worker_count(0, 1) == 1);
}

TEST_CASE("parallel_for reports the lowest failing index") {
  std::vector<int> seen(20, 0);
  parallel_for(20, 4, [&](int i) { seen[i] = i * i; });
  for (int i = 0; i < 20; ++i) CHECK(seen[i] == i * i);
  try {
    parallel_for(20, 4, [&](int i) {
      if (i == 5 || i == 13) throw ConfigError("", std::to_string(i));
    });
    FAIL("expected failure");
  } catch (const ConfigError& e) {
    CHECK(e.detail() == "5");
  }
}

TEST_CASE("emit_report writes both formats") {
  const auto dir = std::filesystem::temp_directory_path() / "gconv_emit_test";
  std::filesystem::create_directories(dir);
  const SweepReport r = run_homogenize(config({"kind=homogenize"}));
  emit_report(r, "csv", (dir / "r.csv").string());
  emit_report(r, "json", (dir / "r.json").string());
  std::ifstream in(dir / "r.json");
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(report_from_json(json::parse(buf.str())) == r);
  CHECK_THROWS_AS(emit_report(r, "xml", (dir / "r.xml").string()), ConfigError);
  CHECK_THROWS_AS(emit_report(r, "csv", (dir / "missing" / "r.csv").string()), Error);
  std::filesystem::remove_all(dir);
}
