#include "gconv/mesh_fem.hpp"

#include <algorithm>
#include <cmath>

namespace gconv {

Mesh build_interval_mesh(int n_cells, double x0, double x1) {
  if (n_cells < 1) throw ConfigError("n_cells", "interval mesh needs at least one cell");
  if (!(x1 > x0)) throw ConfigError("interval", "degenerate interval");
  Mesh m;
  m.dim_ = 1;
  m.nx_ = n_cells;
  m.ny_ = 0;
  m.lo_ = {x0, 0.0};
  m.hi_ = {x1, 0.0};
  const double dx = (x1 - x0) / n_cells;
  m.vertices_.resize(n_cells + 1);
  m.boundary_.assign(n_cells + 1, 0);
  for (int i = 0; i <= n_cells; ++i) m.vertices_[i] = {i == n_cells ? x1 : x0 + i * dx, 0.0};
  m.boundary_.front() = m.boundary_.back() = 1;
  m.cells_.resize(n_cells);
  for (int i = 0; i < n_cells; ++i) m.cells_[i] = {i, i + 1, -1};
  return m;
}

Mesh build_rect_mesh(int nx, int ny, Point lo, Point hi) {
  if (nx < 1 || ny < 1) throw ConfigError("nx", "rectangle mesh needs nx, ny >= 1");
  if (!(hi.x > lo.x) || !(hi.y > lo.y)) throw ConfigError("rect", "degenerate rectangle");
  Mesh m;
  m.dim_ = 2;
  m.nx_ = nx;
  m.ny_ = ny;
  m.lo_ = lo;
  m.hi_ = hi;
  const double dx = (hi.x - lo.x) / nx;
  const double dy = (hi.y - lo.y) / ny;
  const int stride = nx + 1;
  m.vertices_.resize(static_cast<std::size_t>(stride) * (ny + 1));
  m.boundary_.assign(m.vertices_.size(), 0);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const int v = j * stride + i;
      m.vertices_[v] = {i == nx ? hi.x : lo.x + i * dx, j == ny ? hi.y : lo.y + j * dy};
      m.boundary_[v] = (i == 0 || j == 0 || i == nx || j == ny) ? 1 : 0;
    }
  }
  m.cells_.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = j * stride + i, v10 = v00 + 1;
      const int v01 = v00 + stride, v11 = v01 + 1;
      m.cells_.push_back({v00, v10, v11});
      m.cells_.push_back({v00, v11, v01});
    }
  }
  return m;
}

double Mesh::domain_measure() const {
  return dim_ == 1 ? hi_.x - lo_.x : (hi_.x - lo_.x) * (hi_.y - lo_.y);
}

double Mesh::cell_measure(int c) const {
  const auto& cv = cells_[c];
  if (dim_ == 1) return vertices_[cv[1]].x - vertices_[cv[0]].x;
  const Point& a = vertices_[cv[0]];
  const Point& b = vertices_[cv[1]];
  const Point& d = vertices_[cv[2]];
  return 0.5 * std::abs((b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y));
}

int Mesh::locate(Point p) const {
  const int i = std::clamp(static_cast<int>(std::floor((p.x - lo_.x) / delta_x())), 0, nx_ - 1);
  if (dim_ == 1) return i;
  const int j = std::clamp(static_cast<int>(std::floor((p.y - lo_.y) / delta_y())), 0, ny_ - 1);
  const Point& corner = vertices_[j * (nx_ + 1) + i];
  const double s = (p.x - corner.x) / delta_x();
  const double t = (p.y - corner.y) / delta_y();
  return 2 * (j * nx_ + i) + (s >= t ? 0 : 1);
}

const char* to_string(BoundaryRule rule) {
  switch (rule) {
    case BoundaryRule::dirichlet_zero: return "dirichlet-zero";
    case BoundaryRule::periodic: return "periodic";
    case BoundaryRule::natural: return "natural";
  }
  return "?";
}

Point CellGeometry::map(const double* ref) const {
  if (local_count == 2) return {nodes[0].x + ref[0] * (nodes[1].x - nodes[0].x), 0.0};
  return {nodes[0].x + ref[0] * (nodes[1].x - nodes[0].x) + ref[1] * (nodes[2].x - nodes[0].x),
          nodes[0].y + ref[0] * (nodes[1].y - nodes[0].y) + ref[1] * (nodes[2].y - nodes[0].y)};
}

std::array<double, 3> CellGeometry::shape(const double* ref) const {
  if (local_count == 2) return {1.0 - ref[0], ref[0], 0.0};
  return {1.0 - ref[0] - ref[1], ref[0], ref[1]};
}

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, BoundaryRule rule) : mesh_(std::move(mesh)), rule_(rule) {
  const Mesh& m = *mesh_;
  const int nv = m.vertex_count();
  dof_of_vertex_.assign(nv, -1);
  switch (rule) {
    case BoundaryRule::dirichlet_zero:
      for (int v = 0; v < nv; ++v) {
        if (!m.on_boundary(v)) {
          dof_of_vertex_[v] = n_++;
          vertex_of_dof_.push_back(v);
        }
      }
      break;
    case BoundaryRule::natural:
      for (int v = 0; v < nv; ++v) {
        dof_of_vertex_[v] = n_++;
        vertex_of_dof_.push_back(v);
      }
      break;
    case BoundaryRule::periodic: {
      const int nx = m.nx();
      if (m.dimension() == 1) {
        n_ = nx;
        for (int v = 0; v < nv; ++v) dof_of_vertex_[v] = v % nx;
      } else {
        const int ny = m.ny();
        n_ = nx * ny;
        for (int j = 0; j <= ny; ++j)
          for (int i = 0; i <= nx; ++i) dof_of_vertex_[j * (nx + 1) + i] = (j % ny) * nx + (i % nx);
      }
      vertex_of_dof_.assign(n_, -1);
      for (int v = 0; v < nv; ++v) {
        int& rep = vertex_of_dof_[dof_of_vertex_[v]];
        if (rep < 0) rep = v;
      }
      break;
    }
  }
}

FeSpace build_space(std::shared_ptr<const Mesh> mesh, BoundaryRule rule) {
  if (!mesh || mesh->cell_count() == 0) throw ConfigError("mesh", "empty mesh");
  return FeSpace(std::move(mesh), rule);
}

CellGeometry FeSpace::geometry(int c) const {
  const Mesh& m = *mesh_;
  const auto& cv = m.cell(c);
  CellGeometry g;
  if (m.dimension() == 1) {
    g.local_count = 2;
    g.nodes[0] = m.vertex(cv[0]);
    g.nodes[1] = m.vertex(cv[1]);
    g.measure = g.nodes[1].x - g.nodes[0].x;
    g.grads[0] = {-1.0 / g.measure, 0.0};
    g.grads[1] = {1.0 / g.measure, 0.0};
    g.dofs = {dof_of_vertex_[cv[0]], dof_of_vertex_[cv[1]], -1};
    return g;
  }
  g.local_count = 3;
  for (int a = 0; a < 3; ++a) {
    g.nodes[a] = m.vertex(cv[a]);
    g.dofs[a] = dof_of_vertex_[cv[a]];
  }
  const Point e1{g.nodes[1].x - g.nodes[0].x, g.nodes[1].y - g.nodes[0].y};
  const Point e2{g.nodes[2].x - g.nodes[0].x, g.nodes[2].y - g.nodes[0].y};
  const double det = e1.x * e2.y - e2.x * e1.y;
  g.measure = 0.5 * std::abs(det);
  g.grads[1] = {e2.y / det, -e2.x / det};
  g.grads[2] = {-e1.y / det, e1.x / det};
  g.grads[0] = {-g.grads[1].x - g.grads[2].x, -g.grads[1].y - g.grads[2].y};
  return g;
}

Vector FeSpace::interpolate(const std::function<double(Point)>& f) const {
  Vector u(n_);
  for (int d = 0; d < n_; ++d) u[d] = f(mesh_->vertex(vertex_of_dof_[d]));
  return u;
}

double FeSpace::evaluate(const Vector& u, Point p) const {
  const int c = mesh_->locate(p);
  const CellGeometry g = geometry(c);
  double value = 0.0;
  if (g.local_count == 2) {
    const double t = (p.x - g.nodes[0].x) / g.measure;
    const double lam[2] = {1.0 - t, t};
    for (int a = 0; a < 2; ++a)
      if (g.dofs[a] >= 0) value += lam[a] * u[g.dofs[a]];
    return value;
  }
  const Point r{p.x - g.nodes[0].x, p.y - g.nodes[0].y};
  const double l1 = g.grads[1].x * r.x + g.grads[1].y * r.y;
  const double l2 = g.grads[2].x * r.x + g.grads[2].y * r.y;
  const double lam[3] = {1.0 - l1 - l2, l1, l2};
  for (int a = 0; a < 3; ++a)
    if (g.dofs[a] >= 0) value += lam[a] * u[g.dofs[a]];
  return value;
}

Point FeSpace::gradient(const Vector& u, int c) const {
  const CellGeometry g = geometry(c);
  Point grad{0.0, 0.0};
  for (int a = 0; a < g.local_count; ++a) {
    if (g.dofs[a] < 0) continue;
    grad.x += u[g.dofs[a]] * g.grads[a].x;
    grad.y += u[g.dofs[a]] * g.grads[a].y;
  }
  return grad;
}

Vector transfer(const FeSpace& from, const Vector& u, const FeSpace& to) {
  Vector out(to.dofs());
  for (int d = 0; d < to.dofs(); ++d) out[d] = from.evaluate(u, to.mesh().vertex(to.vertex_of_dof(d)));
  return out;
}

}  // namespace gconv
