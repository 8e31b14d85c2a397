#pragma once

#include <initializer_list>

#include <Eigen/LU>

#include "iipm/iipm.hpp"

namespace iipm::testing {

inline SparseMatrix sparse(const DenseMatrix& M) { return M.sparseView(0.0, 0.0); }

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

inline QpProblem make_problem(const DenseMatrix& A, const DenseMatrix& Q, const Vector& b, const Vector& c) {
  return QpProblem{sparse(A), sparse(Q), b, c};
}

/// Solves the full (2n + m) Newton system with a dense LU, no elimination.
struct Oracle {
  Vector dx, dy, ds;
};

inline Oracle oracle_newton(const QpProblem& p, const Iterate& it, const Vector& rhs3) {
  const Eigen::Index n = p.n(), m = p.m();
  DenseMatrix J = DenseMatrix::Zero(2 * n + m, 2 * n + m);
  J.block(0, 0, m, n) = DenseMatrix(p.A);
  J.block(m, 0, n, n) = -DenseMatrix(p.Q);
  J.block(m, n, n, m) = DenseMatrix(p.A.transpose());
  J.block(m, n + m, n, n) = DenseMatrix::Identity(n, n);
  J.block(m + n, 0, n, n) = it.s().asDiagonal();
  J.block(m + n, n + m, n, n) = it.x().asDiagonal();
  Vector rhs = Vector::Zero(2 * n + m);
  rhs.tail(n) = rhs3;
  const Vector sol = J.fullPivLu().solve(rhs);
  return {sol.head(n), sol.segment(n, m), sol.tail(n)};
}

}  // namespace iipm::testing
