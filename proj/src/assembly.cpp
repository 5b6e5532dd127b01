#include "gconv/assembly.hpp"

#include <cmath>

namespace gconv {

void SymmetricAssembler::add(int i, int j, double value) {
  if (i > j) std::swap(i, j);
  upper_.emplace_back(i, j, value);
}

SparseSymMatrix SymmetricAssembler::finish() const {
  SparseMatrix upper(n_, n_);
  upper.setFromTriplets(upper_.begin(), upper_.end());
  std::vector<Eigen::Triplet<double>> both;
  both.reserve(2 * upper.nonZeros());
  for (int k = 0; k < upper.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(upper, k); it; ++it) {
      both.emplace_back(it.row(), it.col(), it.value());
      if (it.row() != it.col()) both.emplace_back(it.col(), it.row(), it.value());
    }
  }
  SparseSymMatrix out(n_);
  out.full_.setFromTriplets(both.begin(), both.end());
  out.full_.makeCompressed();
  return out;
}

SparseSymMatrix combine(double a, const SparseSymMatrix& A, double b, const SparseSymMatrix& B) {
  if (A.size() != B.size()) throw ConfigError("", "combine: dimension mismatch");
  SparseSymMatrix out(A.size());
  out.full_ = a * A.full_ + b * B.full_;
  out.full_.makeCompressed();
  return out;
}

SparseSymMatrix SparseSymMatrix::identity(int n) {
  SymmetricAssembler asm_(n);
  for (int i = 0; i < n; ++i) asm_.add(i, i, 1.0);
  return asm_.finish();
}

SparseSymMatrix SparseSymMatrix::from_dense(const Eigen::MatrixXd& dense) {
  const int n = static_cast<int>(dense.rows());
  SymmetricAssembler asm_(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      if (dense(i, j) != 0.0) asm_.add(i, j, dense(i, j));
  return asm_.finish();
}

SparseSymMatrix SparseSymMatrix::without(int drop) const {
  const int n = size();
  SymmetricAssembler asm_(n - 1);
  for (int k = 0; k < full_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(full_, k); it; ++it) {
      const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
      if (i > j || i == drop || j == drop) continue;
      asm_.add(i - (i > drop), j - (j > drop), it.value());
    }
  }
  return asm_.finish();
}

QuadratureRule cell_rule(const FeSpace& space, int quad_order) {
  if (space.dimension() == 1) return interval_rule(quad_order > 0 ? quad_order : kDefaultIntervalDegree);
  return triangle_rule(quad_order > 0 ? quad_order : kDefaultTriangleDegree);
}

namespace {

void require_nonempty(const FeSpace& space) {
  if (space.dofs() == 0) throw ConfigError("mesh", "finite-element space has no degrees of freedom");
}

int ref_stride(const FeSpace& space) { return space.dimension() == 1 ? 1 : 2; }

// Scatters a local symmetric matrix (upper part used) into the assembler.
void scatter(SymmetricAssembler& out, const CellGeometry& g, const double (&local)[3][3]) {
  for (int a = 0; a < g.local_count; ++a) {
    if (g.dofs[a] < 0) continue;
    for (int b = a; b < g.local_count; ++b) {
      if (g.dofs[b] < 0) continue;
      const double v = (a != b && g.dofs[a] == g.dofs[b]) ? 2.0 * local[a][b] : local[a][b];
      out.add(g.dofs[a], g.dofs[b], v);
    }
  }
}

template <class Weight>
SparseSymMatrix mass_like(const FeSpace& space, const Weight& weight, int quad_order) {
  require_nonempty(space);
  const QuadratureRule rule = cell_rule(space, quad_order);
  const int stride = ref_stride(space);
  SymmetricAssembler out(space.dofs());
  for (int c = 0; c < space.mesh().cell_count(); ++c) {
    const CellGeometry g = space.geometry(c);
    double local[3][3] = {};
    for (int q = 0; q < rule.size(); ++q) {
      const double* ref = &rule.points[static_cast<std::size_t>(q) * stride];
      const double w = rule.weights[q] * g.measure * weight(g.map(ref));
      const auto phi = g.shape(ref);
      for (int a = 0; a < g.local_count; ++a)
        for (int b = a; b < g.local_count; ++b) local[a][b] += w * phi[a] * phi[b];
    }
    scatter(out, g, local);
  }
  return out.finish();
}

template <class Source>
Vector load_like(const FeSpace& space, const Source& f, int quad_order) {
  require_nonempty(space);
  const QuadratureRule rule = cell_rule(space, quad_order);
  const int stride = ref_stride(space);
  Vector b = Vector::Zero(space.dofs());
  for (int c = 0; c < space.mesh().cell_count(); ++c) {
    const CellGeometry g = space.geometry(c);
    for (int q = 0; q < rule.size(); ++q) {
      const double* ref = &rule.points[static_cast<std::size_t>(q) * stride];
      const double w = rule.weights[q] * g.measure * f(g.map(ref));
      const auto phi = g.shape(ref);
      for (int a = 0; a < g.local_count; ++a)
        if (g.dofs[a] >= 0) b[g.dofs[a]] += w * phi[a];
    }
  }
  return b;
}

}  // namespace

SparseSymMatrix assemble_stiffness(const FeSpace& space, const CoefficientFamily& family, int h, int quad_order) {
  require_nonempty(space);
  if (family.dimension != 0 && family.dimension != space.dimension())
    throw ConfigError("dimension", "family '" + family.name + "' is " + std::to_string(family.dimension) +
                                       "D but the mesh is " + std::to_string(space.dimension()) + "D");
  check_resolution(family.period(h), space.mesh().delta(),
                   "stiffness of '" + family.name + "' at h = " + std::to_string(h));
  const QuadratureRule rule = cell_rule(space, quad_order);
  const int stride = ref_stride(space);
  const bool one_d = space.dimension() == 1;
  SymmetricAssembler out(space.dofs());
  for (int c = 0; c < space.mesh().cell_count(); ++c) {
    const CellGeometry g = space.geometry(c);
    double local[3][3] = {};
    for (int q = 0; q < rule.size(); ++q) {
      const double* ref = &rule.points[static_cast<std::size_t>(q) * stride];
      const SymTensor A = family(h, g.map(ref));
      const double w = rule.weights[q] * g.measure;
      for (int a = 0; a < g.local_count; ++a) {
        const Point Ag = one_d ? Point{A.xx * g.grads[a].x, 0.0} : A.apply(g.grads[a]);
        for (int b = a; b < g.local_count; ++b) local[a][b] += w * (Ag.x * g.grads[b].x + Ag.y * g.grads[b].y);
      }
    }
    scatter(out, g, local);
  }
  return out.finish();
}

SparseSymMatrix assemble_laplacian(const FeSpace& space) {
  return assemble_stiffness(space, make_constant_tensor_family(SymTensor::scalar(1.0), 0), 1, 1);
}

SparseSymMatrix assemble_mass(const FeSpace& space, int quad_order) {
  return mass_like(space, [](Point) { return 1.0; }, quad_order);
}

SparseSymMatrix assemble_mass(const FeSpace& space, const PotentialFamily& weight, int h, int quad_order) {
  check_resolution(weight.period(h), space.mesh().delta(),
                   "potential '" + weight.name + "' at h = " + std::to_string(h));
  return mass_like(space, [&](Point x) { return weight(h, x); }, quad_order);
}

SparseSymMatrix assemble_weighted_mass(const FeSpace& space, const ScalarField& weight, int quad_order) {
  return mass_like(space, weight, quad_order);
}

Vector assemble_load(const FeSpace& space, const SourceFamily& source, int h, int quad_order) {
  return load_like(space, [&](Point x) { return source(h, x); }, quad_order);
}

Vector assemble_load(const FeSpace& space, const ScalarField& f, int quad_order) {
  return load_like(space, f, quad_order);
}

H1Norms discrete_h1_norms(const FeSpace& space, const Vector& u) {
  if (u.size() != space.dofs()) throw ConfigError("", "discrete_h1_norms: dimension mismatch");
  const SparseSymMatrix M = assemble_mass(space);
  const SparseSymMatrix K1 = assemble_laplacian(space);
  return {std::sqrt(std::max(0.0, M.form(u))), std::sqrt(std::max(0.0, K1.form(u)))};
}

}  // namespace gconv
