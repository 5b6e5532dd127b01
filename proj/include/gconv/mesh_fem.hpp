#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "gconv/common.hpp"

namespace gconv {

/// Structured simplicial mesh of an interval or a rectangle.
///
/// Rectangles are split into `nx * ny` squares, each cut along the diagonal
/// from its lower-left to its upper-right corner. Vertex (i, j) has index
/// j * (nx + 1) + i. The mesh size is written delta; `h` is reserved for the
/// index of an operator sequence.
class Mesh {
 public:
  int dimension() const { return dim_; }
  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int cell_count() const { return static_cast<int>(cells_.size()); }
  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& vertex(int v) const { return vertices_[v]; }
  /// Vertex indices of a cell; the third entry is unused in 1D.
  const std::array<int, 3>& cell(int c) const { return cells_[c]; }
  bool on_boundary(int v) const { return boundary_[v] != 0; }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  Point lower() const { return lo_; }
  Point upper() const { return hi_; }
  double delta_x() const { return (hi_.x - lo_.x) / nx_; }
  double delta_y() const { return dim_ == 2 ? (hi_.y - lo_.y) / ny_ : 0.0; }
  /// Largest cell extent along a coordinate axis.
  double delta() const { return dim_ == 1 ? delta_x() : std::max(delta_x(), delta_y()); }
  /// |Omega|
  double domain_measure() const;
  double cell_measure(int c) const;

  /// Cell containing p (points on shared faces go to the lower-index cell side).
  int locate(Point p) const;

  friend Mesh build_interval_mesh(int n_cells, double x0, double x1);
  friend Mesh build_rect_mesh(int nx, int ny, Point lo, Point hi);

 private:
  Mesh() = default;
  int dim_ = 1;
  int nx_ = 0, ny_ = 0;
  Point lo_, hi_;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> cells_;
  std::vector<char> boundary_;
};

Mesh build_interval_mesh(int n_cells, double x0, double x1);
Mesh build_rect_mesh(int nx, int ny, Point lo, Point hi);

enum class BoundaryRule {
  dirichlet_zero,  // H^1_0: boundary vertices carry no dof
  periodic,        // opposite faces identified
  natural,         // every vertex is a dof (H^1)
};

const char* to_string(BoundaryRule rule);

/// P1 geometry of a single cell: measure, vertex coordinates and the constant
/// gradients of the local hat functions.
struct CellGeometry {
  double measure = 0.0;
  int local_count = 2;
  std::array<Point, 3> nodes{};
  std::array<Point, 3> grads{};
  std::array<int, 3> dofs{-1, -1, -1};  // -1: eliminated vertex

  /// Physical point of a reference quadrature point (see QuadratureRule).
  Point map(const double* ref) const;
  /// Values of the local hats at a reference point.
  std::array<double, 3> shape(const double* ref) const;
};

/// P1 finite-element space over an immutable mesh.
class FeSpace {
 public:
  FeSpace(std::shared_ptr<const Mesh> mesh, BoundaryRule rule);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  BoundaryRule rule() const { return rule_; }
  int dofs() const { return n_; }
  int dimension() const { return mesh_->dimension(); }
  /// Dof of vertex v, or -1 for an eliminated boundary vertex.
  int dof_of_vertex(int v) const { return dof_of_vertex_[v]; }
  /// A representative vertex of each dof.
  int vertex_of_dof(int d) const { return vertex_of_dof_[d]; }

  CellGeometry geometry(int c) const;

  /// Nodal interpolant of f.
  Vector interpolate(const std::function<double(Point)>& f) const;
  /// Evaluates the P1 function with coefficients u at p.
  double evaluate(const Vector& u, Point p) const;
  /// Gradient of the P1 function u on cell c.
  Point gradient(const Vector& u, int c) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  BoundaryRule rule_;
  int n_ = 0;
  std::vector<int> dof_of_vertex_;
  std::vector<int> vertex_of_dof_;
};

FeSpace build_space(std::shared_ptr<const Mesh> mesh, BoundaryRule rule);
inline FeSpace build_space(const Mesh& mesh, BoundaryRule rule) {
  return build_space(std::make_shared<const Mesh>(mesh), rule);
}

/// Re-expresses a P1 function of `from` as a coefficient vector of `to` by
/// evaluating it at the dof vertices of `to` (exact for nested meshes).
Vector transfer(const FeSpace& from, const Vector& u, const FeSpace& to);

}  // namespace gconv
