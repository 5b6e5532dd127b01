#include <doctest.h>

#include <cmath>

#include "gconv/mesh_fem.hpp"

using namespace gconv;

TEST_CASE("interval meshes") {
  const Mesh m = build_interval_mesh(4, 0.0, 1.0);
  REQUIRE(m.vertex_count() == 5);
  for (int v = 0; v < 5; ++v) CHECK(m.vertex(v).x == doctest::Approx(0.25 * v));
  int flags = 0;
  for (int v = 0; v < 5; ++v) flags += m.on_boundary(v);
  CHECK(flags == 2);
  CHECK(m.on_boundary(0));
  CHECK(m.on_boundary(4));

  const Mesh one = build_interval_mesh(1, 0.0, 1.0);
  CHECK(one.cell_count() == 1);
  CHECK(one.on_boundary(0));
  CHECK(one.on_boundary(1));

  const Mesh two = build_interval_mesh(8, 0.0, 2.0);
  for (int c = 0; c < two.cell_count(); ++c) CHECK(two.cell_measure(c) == doctest::Approx(0.25));
  CHECK(two.delta() == doctest::Approx(0.25));

  CHECK_THROWS_AS(build_interval_mesh(0, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(build_interval_mesh(3, 1.0, 1.0), ConfigError);
}

TEST_CASE("rectangle meshes") {
  const Mesh a = build_rect_mesh(2, 2, {0, 0}, {1, 1});
  CHECK(a.vertex_count() == 9);
  CHECK(a.cell_count() == 8);
  const Mesh b = build_rect_mesh(1, 1, {0, 0}, {1, 1});
  CHECK(b.cell_count() == 2);
  CHECK(b.cell_measure(0) == doctest::Approx(0.5));
  CHECK(b.cell_measure(1) == doctest::Approx(0.5));
  const Mesh c = build_rect_mesh(4, 2, {0, 0}, {2, 1});
  CHECK(c.vertex_count() == 15);
  CHECK(c.cell_count() == 16);
  CHECK_THROWS_AS(build_rect_mesh(0, 2, {0, 0}, {1, 1}), ConfigError);
}

TEST_CASE("cell measures sum to the domain measure") {
  for (const Mesh& m : {build_interval_mesh(37, -1.0, 2.5), build_rect_mesh(7, 5, {0, 0}, {1.5, 0.75}),
                        build_rect_mesh(33, 33, {0, 0}, {1, 1})}) {
    double s = 0.0;
    for (int c = 0; c < m.cell_count(); ++c) s += m.cell_measure(c);
    CHECK(std::abs(s - m.domain_measure()) <= 1e-12 * m.domain_measure());
  }
}

TEST_CASE("dof counts per boundary rule") {
  CHECK(build_space(build_interval_mesh(4, 0, 1), BoundaryRule::dirichlet_zero).dofs() == 3);
  CHECK(build_space(build_interval_mesh(4, 0, 1), BoundaryRule::periodic).dofs() == 4);
  CHECK(build_space(build_interval_mesh(4, 0, 1), BoundaryRule::natural).dofs() == 5);
  const Mesh sq = build_rect_mesh(2, 2, {0, 0}, {1, 1});
  CHECK(build_space(sq, BoundaryRule::periodic).dofs() == 4);
  CHECK(build_space(sq, BoundaryRule::dirichlet_zero).dofs() == 1);
  CHECK(build_space(sq, BoundaryRule::natural).dofs() == 9);
}

TEST_CASE("dirichlet dofs sit on interior vertices only") {
  const auto mesh = std::make_shared<const Mesh>(build_rect_mesh(6, 4, {0, 0}, {1, 1}));
  const FeSpace s(mesh, BoundaryRule::dirichlet_zero);
  for (int d = 0; d < s.dofs(); ++d) {
    CHECK_FALSE(mesh->on_boundary(s.vertex_of_dof(d)));
    CHECK(s.dof_of_vertex(s.vertex_of_dof(d)) == d);
  }
  for (int v = 0; v < mesh->vertex_count(); ++v)
    if (mesh->on_boundary(v)) CHECK(s.dof_of_vertex(v) == -1);
}

TEST_CASE("periodic identification") {
  const auto mesh = std::make_shared<const Mesh>(build_rect_mesh(4, 3, {0, 0}, {1, 1}));
  const FeSpace s(mesh, BoundaryRule::periodic);
  CHECK(s.dofs() == 12);
  // opposite faces share dofs, and applying the map twice changes nothing
  for (int j = 0; j <= 3; ++j) CHECK(s.dof_of_vertex(j * 5 + 0) == s.dof_of_vertex(j * 5 + 4));
  for (int i = 0; i <= 4; ++i) CHECK(s.dof_of_vertex(i) == s.dof_of_vertex(3 * 5 + i));
  for (int v = 0; v < mesh->vertex_count(); ++v)
    CHECK(s.dof_of_vertex(s.vertex_of_dof(s.dof_of_vertex(v))) == s.dof_of_vertex(v));
  double area = 0.0;
  for (int c = 0; c < mesh->cell_count(); ++c) area += s.geometry(c).measure;
  CHECK(area == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("interpolation reproduces affine functions") {
  const FeSpace s = build_space(build_rect_mesh(5, 7, {0, 0}, {1, 2}), BoundaryRule::natural);
  auto f = [](Point p) { return 1.5 - 2.0 * p.x + 0.25 * p.y; };
  const Vector u = s.interpolate(f);
  for (Point p : {Point{0.1, 0.3}, Point{0.77, 1.9}, Point{0.5, 1.0}, Point{1.0, 2.0}})
    CHECK(s.evaluate(u, p) == doctest::Approx(f(p)).epsilon(1e-13));
  for (int c = 0; c < s.mesh().cell_count(); ++c) {
    const Point g = s.gradient(u, c);
    CHECK(g.x == doctest::Approx(-2.0));
    CHECK(g.y == doctest::Approx(0.25));
  }
}

TEST_CASE("locate finds the containing cell") {
  const Mesh m = build_rect_mesh(3, 3, {0, 0}, {1, 1});
  // below the diagonal of square (1,1) -> even cell, above -> odd
  CHECK(m.locate({0.5, 0.4}) == 2 * (1 * 3 + 1));
  CHECK(m.locate({0.4, 0.5}) == 2 * (1 * 3 + 1) + 1);
  const Mesh i = build_interval_mesh(4, 0, 1);
  CHECK(i.locate({0.3, 0}) == 1);
  CHECK(i.locate({1.0, 0}) == 3);
}

TEST_CASE("transfer between nested meshes is exact for P1") {
  const FeSpace coarse = build_space(build_interval_mesh(8, 0, 1), BoundaryRule::dirichlet_zero);
  const FeSpace fine = build_space(build_interval_mesh(32, 0, 1), BoundaryRule::dirichlet_zero);
  const Vector u = coarse.interpolate([](Point p) { return std::sin(3.0 * p.x) * p.x * (1 - p.x); });
  const Vector w = transfer(coarse, u, fine);
  for (double x = 0.0; x <= 1.0; x += 0.01) CHECK(fine.evaluate(w, {x, 0}) == doctest::Approx(coarse.evaluate(u, {x, 0})).epsilon(1e-13));
}
