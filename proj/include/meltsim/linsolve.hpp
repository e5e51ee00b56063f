#pragma once

// Krylov solvers for the time-discrete linear systems, and a dense
// partial-pivoting solver used as a test oracle. CG handles the pure
// diffusion case; BiCGStab takes over when convection makes the matrix
// asymmetric.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "meltsim/common.hpp"

namespace meltsim {

struct CsrMatrix {
  int n = 0;
  std::vector<int> row_offsets;  // size n+1
  std::vector<int> cols;         // sorted, unique per row
  std::vector<double> values;

  std::vector<double> multiply(const std::vector<double> &x) const {
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = row_offsets[static_cast<std::size_t>(i)]; k < row_offsets[static_cast<std::size_t>(i) + 1]; ++k)
        s += values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])];
      y[static_cast<std::size_t>(i)] = s;
    }
    return y;
  }

  double &at(int i, int j) {
    for (int k = row_offsets[static_cast<std::size_t>(i)]; k < row_offsets[static_cast<std::size_t>(i) + 1]; ++k)
      if (cols[static_cast<std::size_t>(k)] == j) return values[static_cast<std::size_t>(k)];
    throw Error("CsrMatrix: entry (" + std::to_string(i) + "," + std::to_string(j) +
                ") is outside the sparsity pattern");
  }

  double get(int i, int j) const {
    for (int k = row_offsets[static_cast<std::size_t>(i)]; k < row_offsets[static_cast<std::size_t>(i) + 1]; ++k)
      if (cols[static_cast<std::size_t>(k)] == j) return values[static_cast<std::size_t>(k)];
    return 0.0;
  }
};

class SolveError : public Error {
public:
  SolveError(const std::string &msg, double residual)
      : Error(msg + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

namespace linsolve {

inline double dot(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const std::vector<double> &a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const std::vector<double> &x, std::vector<double> &y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

struct SolveOptions {
  double tol = 1e-8;  // relative residual
  int max_iter = 2000;
  bool jacobi = false;  // optional diagonal preconditioning
};

inline std::vector<double> jacobi_diag(const CsrMatrix &A) {
  std::vector<double> d(static_cast<std::size_t>(A.n), 1.0);
  for (int i = 0; i < A.n; ++i) {
    double v = A.get(i, i);
    if (v != 0.0) d[static_cast<std::size_t>(i)] = 1.0 / v;
  }
  return d;
}

inline std::vector<double> cg_solve(const CsrMatrix &A, const std::vector<double> &b,
                                    const SolveOptions &opt = {}) {
  const std::size_t n = b.size();
  std::vector<double> x(n, 0.0);
  double bnorm = norm(b);
  if (bnorm == 0.0) return x;
  const double target = opt.tol * bnorm;

  std::vector<double> prec = opt.jacobi ? jacobi_diag(A) : std::vector<double>();
  auto apply_prec = [&](const std::vector<double> &r) {
    if (prec.empty()) return r;
    std::vector<double> z(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = prec[i] * r[i];
    return z;
  };

  std::vector<double> r = b;
  std::vector<double> z = apply_prec(r);
  std::vector<double> p = z;
  double rz = dot(r, z);
  for (int it = 0; it < opt.max_iter; ++it) {
    std::vector<double> Ap = A.multiply(p);
    double pAp = dot(p, Ap);
    if (pAp <= 0.0) throw SolveError("cg: matrix is not positive definite", norm(r) / bnorm);
    double alpha = rz / pAp;
    axpy(alpha, p, x);
    axpy(-alpha, Ap, r);
    if (norm(r) <= target) return x;
    z = apply_prec(r);
    double rz_new = dot(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolveError("cg: no convergence within " + std::to_string(opt.max_iter) + " iterations",
                   norm(r) / bnorm);
}

inline std::vector<double> bicgstab_solve(const CsrMatrix &A, const std::vector<double> &b,
                                          const SolveOptions &opt = {}) {
  const std::size_t n = b.size();
  std::vector<double> x(n, 0.0);
  double bnorm = norm(b);
  if (bnorm == 0.0) return x;
  const double target = opt.tol * bnorm;

  std::vector<double> prec = opt.jacobi ? jacobi_diag(A) : std::vector<double>();
  auto apply_prec = [&](const std::vector<double> &v) {
    if (prec.empty()) return v;
    std::vector<double> z(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) z[i] = prec[i] * v[i];
    return z;
  };

  std::vector<double> r = b;  // x0 = 0
  std::vector<double> r0 = r;
  std::vector<double> p(n, 0.0), v(n, 0.0);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (int it = 0; it < opt.max_iter; ++it) {
    double rho_new = dot(r0, r);
    if (std::abs(rho_new) < 1e-300)
      throw SolveError("bicgstab: breakdown (rho ~ 0)", norm(r) / bnorm);
    if (it == 0) {
      p = r;
    } else {
      double beta = (rho_new / rho) * (alpha / omega);
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }
    rho = rho_new;
    std::vector<double> phat = apply_prec(p);
    v = A.multiply(phat);
    double r0v = dot(r0, v);
    if (std::abs(r0v) < 1e-300)
      throw SolveError("bicgstab: breakdown (r0.v ~ 0)", norm(r) / bnorm);
    alpha = rho / r0v;
    std::vector<double> s = r;
    axpy(-alpha, v, s);
    if (norm(s) <= target) {
      axpy(alpha, phat, x);
      return x;
    }
    std::vector<double> shat = apply_prec(s);
    std::vector<double> t = A.multiply(shat);
    double tt = dot(t, t);
    if (tt == 0.0) throw SolveError("bicgstab: breakdown (t = 0)", norm(s) / bnorm);
    omega = dot(t, s) / tt;
    if (omega == 0.0) throw SolveError("bicgstab: stagnation (omega = 0)", norm(s) / bnorm);
    axpy(alpha, phat, x);
    axpy(omega, shat, x);
    r = s;
    axpy(-omega, t, r);
    if (norm(r) <= target) return x;
  }
  throw SolveError("bicgstab: no convergence within " + std::to_string(opt.max_iter) + " iterations",
                   norm(r) / bnorm);
}

// Gaussian elimination with partial pivoting; row-major dense input.
inline std::vector<double> direct_solve_dense(std::vector<double> A, std::vector<double> b) {
  const std::size_t n = b.size();
  if (A.size() != n * n) throw Error("direct_solve_dense: shape mismatch");
  if (n > 2000) throw Error("direct_solve_dense: n > 2000");
  std::vector<std::size_t> piv(n);
  for (std::size_t i = 0; i < n; ++i) piv[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = k;
    double best_abs = std::abs(A[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      double a = std::abs(A[i * n + k]);
      if (a > best_abs) {
        best = i;
        best_abs = a;
      }
    }
    if (best_abs < 1e-300) throw Error("direct_solve_dense: singular to working precision");
    if (best != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(A[k * n + j], A[best * n + j]);
      std::swap(b[k], b[best]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      double f = A[i * n + k] / A[k * n + k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) A[i * n + j] -= f * A[k * n + j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= A[ii * n + j] * x[j];
    x[ii] = s / A[ii * n + ii];
  }
  return x;
}

}  // namespace linsolve

}  // namespace meltsim
