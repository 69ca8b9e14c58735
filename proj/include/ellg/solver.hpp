#pragma once

// Krylov solvers (preconditioned CG, restarted right-preconditioned GMRES),
// a block-diagonal preconditioner, and a dense SPD factorization.

#include "ellg/common.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <sstream>

namespace ellg {

struct LinearSolveReport {
  int iterations = 0;
  double relative_residual = 0;
  double seconds = 0;
  bool converged = false;
};

struct SolverOptions {
  double tolerance = 1e-10;  // relative residual ||Ax - b|| / ||b||
  int max_iterations = 0;    // 0: 10 * dim
  int restart = 50;          // GMRES only
};

class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, LinearSolveReport report)
      : NumericalError(what), report_(report) {}
  const LinearSolveReport& report() const { return report_; }

 private:
  LinearSolveReport report_;
};

struct IdentityPreconditioner {
  Vector apply(const Vector& r) const { return r; }
};

/// Block-Jacobi scaling: inverts the diagonal sub-blocks of A on a given
/// partition of the unknowns. Singular blocks fall back to identity.
class BlockDiagonalPreconditioner {
 public:
  BlockDiagonalPreconditioner() = default;

  template <class Matrix>
  BlockDiagonalPreconditioner(const Matrix& A, std::vector<std::vector<Index>> blocks)
      : blocks_(std::move(blocks)) {
    inverses_.reserve(blocks_.size());
    for (const auto& b : blocks_) {
      const Index n = static_cast<Index>(b.size());
      DenseMatrix sub(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) sub(i, j) = A.coeff(b[i], b[j]);
      Eigen::FullPivLU<DenseMatrix> lu(sub);
      inverses_.push_back(lu.isInvertible() ? DenseMatrix(lu.inverse()) : DenseMatrix::Identity(n, n));
    }
  }

  /// Contiguous blocks of a fixed size (the last one may be shorter).
  template <class Matrix>
  static BlockDiagonalPreconditioner uniform(const Matrix& A, Index block_size) {
    std::vector<std::vector<Index>> blocks;
    for (Index s = 0; s < A.rows(); s += block_size) {
      std::vector<Index> b;
      for (Index i = s; i < std::min<Index>(s + block_size, A.rows()); ++i) b.push_back(i);
      blocks.push_back(std::move(b));
    }
    return BlockDiagonalPreconditioner(A, std::move(blocks));
  }

  Vector apply(const Vector& r) const {
    Vector z(r.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& b = blocks_[k];
      Vector rb(b.size());
      for (std::size_t i = 0; i < b.size(); ++i) rb[i] = r[b[i]];
      Vector zb = inverses_[k] * rb;
      for (std::size_t i = 0; i < b.size(); ++i) z[b[i]] = zb[i];
    }
    return z;
  }

 private:
  std::vector<std::vector<Index>> blocks_;
  std::vector<DenseMatrix> inverses_;
};

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string describe(const char* name, const LinearSolveReport& r, double tol) {
  std::ostringstream os;
  os << name << ": no convergence after " << r.iterations << " iterations (relative residual "
     << r.relative_residual << ", requested " << tol << ")";
  return os.str();
}
}  // namespace detail

/// Preconditioned conjugate gradients for symmetric positive definite A.
template <class Matrix, class Preconditioner = IdentityPreconditioner>
Vector solve_spd(const Matrix& A, const Vector& b, const SolverOptions& opt = {},
                 const Preconditioner& M = {}, LinearSolveReport* report = nullptr,
                 const Vector* initial_guess = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  LinearSolveReport rep;
  const Index n = static_cast<Index>(b.size());
  const double bnorm = b.norm();
  Vector x = initial_guess ? *initial_guess : Vector::Zero(n);
  if (bnorm == 0) {
    x.setZero();
    rep.converged = true;
    rep.seconds = detail::seconds_since(t0);
    if (report) *report = rep;
    return x;
  }
  const int max_it = opt.max_iterations > 0 ? opt.max_iterations : 10 * std::max<Index>(n, 1);
  Vector r = b - A * x;
  rep.relative_residual = r.norm() / bnorm;
  while (rep.relative_residual > opt.tolerance && rep.iterations < max_it) {
    Vector z = M.apply(r);
    Vector p = z;
    double rz = r.dot(z);
    while (rep.iterations < max_it) {
      Vector Ap = A * p;
      double pAp = p.dot(Ap);
      if (!(pAp > 0)) {
        rep.seconds = detail::seconds_since(t0);
        if (report) *report = rep;
        throw SolverError("solve_spd: breakdown (matrix not positive definite)", rep);
      }
      double alpha = rz / pAp;
      x += alpha * p;
      r -= alpha * Ap;
      ++rep.iterations;
      if (r.norm() / bnorm <= opt.tolerance) break;
      z = M.apply(r);
      double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    // Guard against drift of the recursively updated residual.
    r = b - A * x;
    rep.relative_residual = r.norm() / bnorm;
  }
  rep.converged = rep.relative_residual <= opt.tolerance;
  rep.seconds = detail::seconds_since(t0);
  if (report) *report = rep;
  if (!rep.converged) throw SolverError(detail::describe("solve_spd", rep, opt.tolerance), rep);
  return x;
}

/// Restarted GMRES with right preconditioning, so the monitored residual is
/// the true residual of the original system.
template <class Matrix, class Preconditioner = IdentityPreconditioner>
Vector solve_general(const Matrix& A, const Vector& b, const SolverOptions& opt = {},
                     const Preconditioner& M = {}, LinearSolveReport* report = nullptr,
                     const Vector* initial_guess = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  LinearSolveReport rep;
  const Index n = static_cast<Index>(b.size());
  const double bnorm = b.norm();
  Vector x = initial_guess ? *initial_guess : Vector::Zero(n);
  if (bnorm == 0) {
    x.setZero();
    rep.converged = true;
    rep.seconds = detail::seconds_since(t0);
    if (report) *report = rep;
    return x;
  }
  const int max_it = opt.max_iterations > 0 ? opt.max_iterations : 10 * std::max<Index>(n, 1);
  const int m = std::max(1, std::min<int>(opt.restart, n));
  Vector r = b - A * x;
  rep.relative_residual = r.norm() / bnorm;
  DenseMatrix Vb(n, m + 1), Z(n, m), H = DenseMatrix::Zero(m + 1, m);
  Vector cs(m), sn(m), g(m + 1);
  while (rep.relative_residual > opt.tolerance && rep.iterations < max_it) {
    const double beta = r.norm();
    Vb.col(0) = r / beta;
    g.setZero();
    g[0] = beta;
    H.setZero();
    int j = 0;
    for (; j < m && rep.iterations < max_it; ++j) {
      Z.col(j) = M.apply(Vb.col(j));
      Vector w = A * Z.col(j);
      for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        H(i, j) = w.dot(Vb.col(i));
        w -= H(i, j) * Vb.col(i);
      }
      H(j + 1, j) = w.norm();
      if (H(j + 1, j) > 0) Vb.col(j + 1) = w / H(j + 1, j);
      for (int i = 0; i < j; ++i) {
        double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      double d = std::hypot(H(j, j), H(j + 1, j));
      cs[j] = d > 0 ? H(j, j) / d : 1.0;
      sn[j] = d > 0 ? H(j + 1, j) / d : 0.0;
      H(j, j) = d;
      H(j + 1, j) = 0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++rep.iterations;
      if (std::abs(g[j + 1]) / bnorm <= opt.tolerance || d == 0) {
        ++j;
        break;
      }
    }
    // Back substitution on the leading j x j triangle (zero pivots skipped).
    Vector y = Vector::Zero(j);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int l = i + 1; l < j; ++l) s -= H(i, l) * y[l];
      y[i] = H(i, i) != 0 ? s / H(i, i) : 0.0;
    }
    x += Z.leftCols(j) * y;
    r = b - A * x;
    rep.relative_residual = r.norm() / bnorm;
  }
  rep.converged = rep.relative_residual <= opt.tolerance;
  rep.seconds = detail::seconds_since(t0);
  if (report) *report = rep;
  if (!rep.converged) throw SolverError(detail::describe("solve_general", rep, opt.tolerance), rep);
  return x;
}

/// Cholesky factorization of a dense symmetric positive definite matrix,
/// reusable for many right-hand sides.
class DenseSpdFactor {
 public:
  explicit DenseSpdFactor(const DenseMatrix& A, double warn_condition = 1e10) : llt_(A) {
    if (A.rows() != A.cols()) throw InvalidInput("factorize_dense_spd: matrix is not square");
    if (llt_.info() != Eigen::Success)
      throw NumericalError("factorize_dense_spd: non-positive pivot; matrix is not SPD (assembly bug?)");
    const double rc = llt_.rcond();
    condition_ = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (condition_ > warn_condition) {
      std::ostringstream os;
      os << "factorize_dense_spd: condition estimate " << condition_ << " exceeds " << warn_condition;
      warning_ = os.str();
    }
  }

  Vector solve(const Vector& b) const { return llt_.solve(b); }
  DenseMatrix solve(const DenseMatrix& B) const { return llt_.solve(B); }
  Index size() const { return static_cast<Index>(llt_.rows()); }

  double condition_estimate() const { return condition_; }
  bool ill_conditioned() const { return !warning_.empty(); }
  const std::string& warning() const { return warning_; }

 private:
  Eigen::LLT<DenseMatrix> llt_;
  double condition_ = 1;
  std::string warning_;
};

inline DenseSpdFactor factorize_dense_spd(const DenseMatrix& A, double warn_condition = 1e10) {
  return DenseSpdFactor(A, warn_condition);
}

}  // namespace ellg
