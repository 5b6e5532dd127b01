#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "gconv/assembly.hpp"

namespace gconv {

/// Sparse LL' factorization with a fill-reducing (AMD) permutation:
/// P A P' = L L'.
class CholeskyFactor {
 public:
  int size() const { return n_; }
  Vector solve(const Vector& b) const;

  /// Lower factor L and the permutation P (as index map) for inspection.
  SparseMatrix lower() const;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> permutation() const;

  friend CholeskyFactor cholesky(const SparseSymMatrix& matrix);

 private:
  using Impl = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
  std::shared_ptr<const Impl> impl_;
  int n_ = 0;
};

/// Factorizes an SPD matrix; throws NumericalError("cholesky", "not positive definite").
CholeskyFactor cholesky(const SparseSymMatrix& matrix);

/// Direct solve through a factor (residual at rounding level).
Vector solve_spd(const CholeskyFactor& factor, const Vector& b);

struct CgOptions {
  double tol = 1e-12;  // relative residual ||Ku - b|| / ||b||
  int max_iterations = 0;  // 0: 10 n
};

/// Jacobi-preconditioned conjugate gradients.
Vector solve_spd(const SparseSymMatrix& matrix, const Vector& b, CgOptions options = {});

struct EigenResult {
  std::vector<double> values;   // ascending
  Eigen::MatrixXd vectors;      // n x k, M-orthonormal columns
  std::vector<double> residuals;  // ||K x - lambda M x||_2 / (lambda ||x||_M)

  int count() const { return static_cast<int>(values.size()); }
};

struct EigOptions {
  double tol = 1e-10;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

/// The k smallest eigenpairs of K x = lambda M x (K, M SPD) by shift-invert
/// Lanczos at shift 0 in the M inner product, with full reorthogonalization.
/// Converged pairs are locked and the search is repeated in their
/// M-orthogonal complement until no smaller eigenvalue turns up, so repeated
/// eigenvalues are returned with their multiplicity.
EigenResult eig_smallest(const SparseSymMatrix& K, const SparseSymMatrix& M, int k, EigOptions options = {});

/// Residual ||K x - lambda M x||_2 / (lambda ||x||_M).
double eigen_residual(const SparseSymMatrix& K, const SparseSymMatrix& M, double lambda, const Vector& x);

}  // namespace gconv
