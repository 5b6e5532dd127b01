#pragma once

#include <functional>
#include <vector>

#include <Eigen/SparseCore>

#include "gconv/coefficients.hpp"
#include "gconv/mesh_fem.hpp"
#include "gconv/quadrature.hpp"

namespace gconv {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Symmetric sparse matrix. Only upper-triangle contributions are accumulated;
/// the lower triangle is a copy, so (i,j) and (j,i) agree bit for bit.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;
  explicit SparseSymMatrix(int n) : full_(n, n) {}

  int size() const { return static_cast<int>(full_.rows()); }
  long nonzeros() const { return full_.nonZeros(); }
  const SparseMatrix& matrix() const { return full_; }
  double coeff(int i, int j) const { return full_.coeff(i, j); }

  Vector operator*(const Vector& x) const { return full_ * x; }
  /// x' A y
  double form(const Vector& x, const Vector& y) const { return x.dot(full_ * y); }
  double form(const Vector& x) const { return form(x, x); }

  /// a A + b B (same dimension).
  friend SparseSymMatrix combine(double a, const SparseSymMatrix& A, double b, const SparseSymMatrix& B);

  static SparseSymMatrix identity(int n);
  static SparseSymMatrix from_dense(const Eigen::MatrixXd& dense);  // reads the upper triangle

  /// Principal submatrix with row/column `drop` removed.
  SparseSymMatrix without(int drop) const;

 private:
  friend class SymmetricAssembler;
  SparseMatrix full_;
};

/// Collects (i, j, value) contributions and produces an exactly symmetric matrix.
class SymmetricAssembler {
 public:
  explicit SymmetricAssembler(int n) : n_(n) {}
  void add(int i, int j, double value);
  SparseSymMatrix finish() const;

 private:
  int n_;
  std::vector<Eigen::Triplet<double>> upper_;
};

using ScalarField = std::function<double(Point)>;

/// K_ij = sum over cells of  int A_h grad(phi_j) . grad(phi_i).
/// `quad_order` is the polynomial degree of exactness; 0 selects the default
/// (4-point Gauss on intervals, 3-point rule on triangles).
SparseSymMatrix assemble_stiffness(const FeSpace& space, const CoefficientFamily& family, int h,
                                   int quad_order = 0);

/// Unit-coefficient stiffness (the discrete Laplacian form).
SparseSymMatrix assemble_laplacian(const FeSpace& space);

/// M_ij = int phi_i phi_j.
SparseSymMatrix assemble_mass(const FeSpace& space, int quad_order = 0);

/// int V_h phi_i phi_j.
SparseSymMatrix assemble_mass(const FeSpace& space, const PotentialFamily& weight, int h, int quad_order = 0);

/// int w phi_i phi_j for a fixed field (limit potentials).
SparseSymMatrix assemble_weighted_mass(const FeSpace& space, const ScalarField& weight, int quad_order = 0);

/// b_i = int f_h phi_i.
Vector assemble_load(const FeSpace& space, const SourceFamily& source, int h, int quad_order = 0);
Vector assemble_load(const FeSpace& space, const ScalarField& f, int quad_order = 0);

struct H1Norms {
  double l2 = 0.0;
  double h1_seminorm = 0.0;
};

/// (sqrt(u'Mu), sqrt(u'K1u)) with K1 the unit-coefficient stiffness.
H1Norms discrete_h1_norms(const FeSpace& space, const Vector& u);

/// Quadrature rule for the space's cell type at the given degree (0: default).
QuadratureRule cell_rule(const FeSpace& space, int quad_order);

}  // namespace gconv
