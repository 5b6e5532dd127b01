#include "gconv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gconv {

Vector CholeskyFactor::solve(const Vector& b) const {
  if (b.size() != n_) throw ConfigError("", "solve: dimension mismatch");
  return impl_->solve(b);
}

SparseMatrix CholeskyFactor::lower() const { return impl_->matrixL(); }

Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> CholeskyFactor::permutation() const {
  return impl_->permutationP();
}

CholeskyFactor cholesky(const SparseSymMatrix& matrix) {
  const SparseMatrix& A = matrix.matrix();
  for (int k = 0; k < A.outerSize(); ++k) {
    bool any = false;
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) any = any || it.value() != 0.0;
    if (!any) throw NumericalError("cholesky", "not positive definite (row " + std::to_string(k) + " is zero)");
  }
  auto impl = std::make_shared<CholeskyFactor::Impl>();
  impl->compute(A);
  if (impl->info() != Eigen::Success) throw NumericalError("cholesky", "not positive definite");
  // The simplicial factor does not flag tiny pivots; check them explicitly.
  const SparseMatrix L = impl->matrixL();
  double max_diag = 0.0, min_diag = std::numeric_limits<double>::infinity();
  for (int k = 0; k < L.outerSize(); ++k) {
    const double d = L.coeff(k, k);
    max_diag = std::max(max_diag, d);
    min_diag = std::min(min_diag, d);
  }
  if (!(min_diag > 1e-7 * max_diag)) throw NumericalError("cholesky", "not positive definite (pivot ratio below 1e-14)");
  CholeskyFactor f;
  f.impl_ = std::move(impl);
  f.n_ = matrix.size();
  return f;
}

Vector solve_spd(const CholeskyFactor& factor, const Vector& b) { return factor.solve(b); }

Vector solve_spd(const SparseSymMatrix& matrix, const Vector& b, CgOptions options) {
  const int n = matrix.size();
  if (b.size() != n) throw ConfigError("", "solve_spd: dimension mismatch");
  const double bnorm = b.norm();
  Vector x = Vector::Zero(n);
  if (bnorm == 0.0) return x;
  const Vector diag = matrix.matrix().diagonal();
  if ((diag.array() <= 0.0).any()) throw NumericalError("cg", "not positive definite (non-positive diagonal)");
  const Vector inv_diag = diag.cwiseInverse();
  const int cap = options.max_iterations > 0 ? options.max_iterations : std::max(100, 10 * n);
  Vector r = b;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 0; it < cap; ++it) {
    const Vector Ap = matrix * p;
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) throw NumericalError("cg", "breakdown: matrix is not positive definite");
    const double step = rz / pAp;
    x += step * p;
    r -= step * Ap;
    if (r.norm() <= options.tol * bnorm) {
      // confirm with the true residual
      if ((b - matrix * x).norm() <= options.tol * bnorm) return x;
      r = b - matrix * x;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw NumericalError("cg", "iteration cap of " + std::to_string(cap) + " exceeded");
}

double eigen_residual(const SparseSymMatrix& K, const SparseSymMatrix& M, double lambda, const Vector& x) {
  const Vector Mx = M * x;
  const double mnorm = std::sqrt(std::max(0.0, x.dot(Mx)));
  return (K * x - lambda * Mx).norm() / (std::abs(lambda) * mnorm);
}

namespace {

struct RunResult {
  std::vector<double> values;  // ascending
  Eigen::MatrixXd vectors;
};

struct Locked {
  std::vector<double> values;
  Eigen::MatrixXd vectors;  // n x s
  Eigen::MatrixXd mvectors;  // M * vectors
};

void project_out(Vector& w, const Eigen::MatrixXd& basis, const Eigen::MatrixXd& mbasis, int cols) {
  if (cols == 0) return;
  const Vector c = mbasis.leftCols(cols).transpose() * w;
  w.noalias() -= basis.leftCols(cols) * c;
}

// One Lanczos sequence on K^{-1} M restricted to the M-complement of `locked`.
// Converges the Ritz pairs that may enter the k smallest: the first one always,
// then those below `cutoff`, at most `want` in total.
RunResult lanczos_run(const SparseSymMatrix& K, const SparseSymMatrix& M, const CholeskyFactor& factor,
                      const Locked& locked, int want, double cutoff, double tol, std::uint64_t seed) {
  const int n = K.size();
  const int nlocked = static_cast<int>(locked.values.size());
  const int free = n - nlocked;
  RunResult out;
  if (free <= 0 || want <= 0) return out;
  const int cap = std::min(std::max(20 * want, 200), free);

  Eigen::MatrixXd Q(n, cap + 1), MQ(n, cap + 1);
  Vector v(n);
  Rng rng(seed);
  double vnorm = 0.0;
  for (int attempt = 0; attempt < 8 && vnorm == 0.0; ++attempt) {
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
    const double raw = std::sqrt(v.dot(M * v));
    for (int pass = 0; pass < 2; ++pass) project_out(v, locked.vectors, locked.mvectors, nlocked);
    const double norm = std::sqrt(std::max(0.0, v.dot(M * v)));
    if (norm > 1e-8 * raw) vnorm = norm;
  }
  if (vnorm == 0.0) return out;
  Q.col(0) = v / vnorm;
  MQ.col(0) = M * Q.col(0);

  std::vector<double> alpha, beta;
  for (int j = 0; j < cap; ++j) {
    Vector w = factor.solve(MQ.col(j));
    alpha.push_back(MQ.col(j).dot(w));
    for (int pass = 0; pass < 2; ++pass) {
      project_out(w, Q, MQ, j + 1);
      project_out(w, locked.vectors, locked.mvectors, nlocked);
    }
    const Vector Mw = M * w;
    const double b = std::sqrt(std::max(0.0, w.dot(Mw)));
    const int m = j + 1;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    const Vector d = Eigen::Map<const Vector>(alpha.data(), m);
    const Vector e = m > 1 ? Vector(Eigen::Map<const Vector>(beta.data(), m - 1)) : Vector(0);
    tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    const Vector& theta = tri.eigenvalues();  // ascending; largest theta <-> smallest lambda
    const double theta_max = std::max(std::abs(theta[m - 1]), std::numeric_limits<double>::min());
    const bool breakdown = b <= 1e-13 * theta_max;

    double kq = 0.0;
    Vector qn;
    if (!breakdown) {
      qn = w / b;
      kq = (K * qn).norm();
    }

    // Ritz indices in ascending lambda order.
    std::vector<int> wanted;
    bool cut = false;
    for (int i = 0; i < m && static_cast<int>(wanted.size()) < want; ++i) {
      const int idx = m - 1 - i;
      if (!(theta[idx] > 0.0)) break;
      const double lambda = 1.0 / theta[idx];
      if (i > 0 && lambda >= cutoff) {
        cut = true;
        break;
      }
      wanted.push_back(idx);
    }
    const bool enough = static_cast<int>(wanted.size()) == want || cut || breakdown;
    bool estimates_ok = enough && !wanted.empty();
    for (int idx : wanted) {
      const double est = breakdown ? 0.0 : b * std::abs(tri.eigenvectors()(m - 1, idx)) * kq;
      if (est > 0.5 * tol) estimates_ok = false;
    }
    const bool last = breakdown || m == cap;
    if (estimates_ok || last) {
      RunResult candidate;
      candidate.vectors.resize(n, static_cast<Eigen::Index>(wanted.size()));
      bool all_ok = true;
      for (std::size_t c = 0; c < wanted.size(); ++c) {
        Vector x = Q.leftCols(m) * tri.eigenvectors().col(wanted[c]);
        x /= std::sqrt(x.dot(M * x));
        const double lambda = 1.0 / theta[wanted[c]];
        candidate.values.push_back(lambda);
        candidate.vectors.col(static_cast<Eigen::Index>(c)) = x;
        if (eigen_residual(K, M, lambda, x) > tol) all_ok = false;
      }
      if (all_ok && !wanted.empty()) return candidate;
      if (last) {
        if (m == free || breakdown) return candidate;  // invariant subspace: Ritz pairs are exact
        throw NumericalError("eig_smallest", "Lanczos did not converge within " + std::to_string(cap) + " steps");
      }
    }
    beta.push_back(b);
    Q.col(j + 1) = qn;
    MQ.col(j + 1) = Mw / b;
  }
  throw NumericalError("eig_smallest", "Lanczos did not converge");
}

void fix_sign(Eigen::Ref<Vector> x) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < x.size(); ++i)
    if (std::abs(x[i]) > std::abs(x[best])) best = i;
  if (x[best] < 0.0) x = -x;
}

}  // namespace

EigenResult eig_smallest(const SparseSymMatrix& K, const SparseSymMatrix& M, int k, EigOptions options) {
  const int n = K.size();
  if (M.size() != n) throw ConfigError("", "eig_smallest: K and M differ in dimension");
  if (k < 1) throw ConfigError("eigen_count", "k must be >= 1");
  if (k > n) throw ConfigError("eigen_count", "k = " + std::to_string(k) + " exceeds the dimension n = " + std::to_string(n));
  const CholeskyFactor factor = cholesky(K);

  Locked locked;
  locked.vectors.resize(n, 0);
  locked.mvectors.resize(n, 0);
  const int max_runs = 2 * k + 4;
  bool certified = false;
  for (int run = 0; run < max_runs && !certified; ++run) {
    const int nlocked = static_cast<int>(locked.values.size());
    const bool full = nlocked == k;
    const double cutoff = full ? locked.values.back() : std::numeric_limits<double>::infinity();
    RunResult r = lanczos_run(K, M, factor, locked, std::min(k, n - nlocked), cutoff, options.tol,
                              options.seed + static_cast<std::uint64_t>(run));
    if (r.values.empty()) {
      if (nlocked == std::min(k, n)) break;
      if (n - nlocked <= 0) break;
      throw NumericalError("eig_smallest", "could not build a start vector in the unlocked complement");
    }
    if (full && r.values.front() >= cutoff * (1.0 - 1e-9)) {
      certified = true;
      break;
    }
    // Merge and keep the k smallest.
    std::vector<double> values = locked.values;
    values.insert(values.end(), r.values.begin(), r.values.end());
    Eigen::MatrixXd vectors(n, static_cast<Eigen::Index>(values.size()));
    vectors << locked.vectors, r.vectors;
    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
    const int keep = std::min<int>(k, static_cast<int>(order.size()));
    Locked next;
    next.vectors.resize(n, keep);
    for (int c = 0; c < keep; ++c) {
      next.values.push_back(values[order[c]]);
      next.vectors.col(c) = vectors.col(order[c]);
    }
    next.mvectors = M.matrix() * next.vectors;
    locked = std::move(next);
    if (static_cast<int>(locked.values.size()) == n) certified = true;
  }
  if (!certified || static_cast<int>(locked.values.size()) < k)
    throw NumericalError("eig_smallest", "could not certify the " + std::to_string(k) + " smallest eigenvalues");

  EigenResult result;
  result.values = locked.values;
  result.vectors = locked.vectors;
  for (int c = 0; c < k; ++c) {
    fix_sign(result.vectors.col(c));
    result.residuals.push_back(eigen_residual(K, M, result.values[c], result.vectors.col(c)));
  }
  return result;
}

}  // namespace gconv
