#pragma once

#include <optional>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include "iipm/core.hpp"

namespace iipm {

/// Standard-form convex QP
///
///   min  cᵀx + ½xᵀQx   s.t.  Ax = b, x ≥ 0
///
/// paired with its dual  max bᵀy − ½xᵀQx  s.t.  Aᵀy + s − Qx = c, s ≥ 0.
/// Q = 0 gives the LP pair.
struct QpProblem {
  SparseMatrix A;  // m × n
  SparseMatrix Q;  // n × n, symmetric PSD
  Vector b;        // m
  Vector c;        // n

  Eigen::Index n() const { return A.cols(); }
  Eigen::Index m() const { return A.rows(); }
};

/// Matrices at or below this column count take the dense factorization path.
inline constexpr Eigen::Index kDenseThreshold = 512;

/// Strictly interior primal-dual point with its cached average
/// complementarity mu = xᵀs / n.
class Iterate {
 public:
  Iterate(Vector x, Vector y, Vector s)
      : x_(std::move(x)), y_(std::move(y)), s_(std::move(s)) {
    if (x_.size() != s_.size() || x_.size() == 0)
      throw Error(ErrorCode::DimensionMismatch, "x and s must have equal, nonzero length");
    for (Eigen::Index j = 0; j < x_.size(); ++j) {
      if (!(x_[j] > 0.0) || !(s_[j] > 0.0))
        throw Error(ErrorCode::NotInterior,
                    "component " + std::to_string(j) + " has x_j s_j not strictly positive");
    }
    mu_ = x_.dot(s_) / static_cast<double>(x_.size());
  }

  const Vector& x() const { return x_; }
  const Vector& y() const { return y_; }
  const Vector& s() const { return s_; }
  double mu() const { return mu_; }
  Eigen::Index n() const { return x_.size(); }

  /// The vector XSe of complementarity products.
  Vector products() const { return x_.cwiseProduct(s_); }

 private:
  Vector x_, y_, s_;
  double mu_ = 0.0;
};

struct ValidationReport {
  bool valid = true;
  std::optional<ErrorCode> error;
  std::string message;
  Eigen::Index rank = 0;
  /// Largest asymmetric entry of Q, when NotSymmetric.
  std::optional<std::pair<Eigen::Index, Eigen::Index>> offending;
};

namespace detail {

inline ValidationReport fail(ValidationReport r, ErrorCode code, std::string msg) {
  r.valid = false;
  r.error = code;
  r.message = std::move(msg);
  return r;
}

inline bool shifted_cholesky_ok(const SparseMatrix& Q, double shift) {
  const Eigen::Index n = Q.rows();
  if (n <= kDenseThreshold) {
    DenseMatrix dense = DenseMatrix(Q);
    dense.diagonal().array() += shift;
    Eigen::LLT<DenseMatrix> llt(dense);
    return llt.info() == Eigen::Success;
  }
  SparseMatrix shifted = Q;
  for (Eigen::Index j = 0; j < n; ++j) shifted.coeffRef(j, j) += shift;
  Eigen::SimplicialLLT<SparseMatrix> llt(shifted);
  return llt.info() == Eigen::Success;
}

}  // namespace detail

/// Checks dimensions, full row rank of A, symmetry and positive
/// semidefiniteness of Q, and n ≥ 2.
inline ValidationReport validate(const QpProblem& p) {
  ValidationReport report;
  const Eigen::Index n = p.n(), m = p.m();

  if (p.Q.rows() != n || p.Q.cols() != n || p.b.size() != m || p.c.size() != n)
    return detail::fail(report, ErrorCode::DimensionMismatch,
                        "A is " + std::to_string(m) + "x" + std::to_string(n) + ", Q is " +
                            std::to_string(p.Q.rows()) + "x" + std::to_string(p.Q.cols()) +
                            ", |b| = " + std::to_string(p.b.size()) +
                            ", |c| = " + std::to_string(p.c.size()));
  if (n < 2) return detail::fail(report, ErrorCode::TooSmall, "n must be at least 2");
  if (m > n)
    return detail::fail(report, ErrorCode::RankDeficient,
                        "m = " + std::to_string(m) + " exceeds n = " + std::to_string(n));

  // Rank-revealing QR on Aᵀ; pivots below 1e-10 of the largest count as zero.
  if (m > 0) {
    Eigen::ColPivHouseholderQR<DenseMatrix> qr(DenseMatrix(p.A.transpose()));
    qr.setThreshold(1e-10);
    report.rank = qr.rank();
    if (report.rank < m)
      return detail::fail(report, ErrorCode::RankDeficient,
                          "rank(A) = " + std::to_string(report.rank) + " < m = " + std::to_string(m));
  }

  // Symmetry of Q to 1e-12 relative to its largest entry.
  double qmax = 0.0;
  for (Eigen::Index k = 0; k < p.Q.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(p.Q, k); it; ++it) qmax = std::max(qmax, std::abs(it.value()));
  const SparseMatrix asym = SparseMatrix(p.Q - SparseMatrix(p.Q.transpose()));
  double worst = 0.0;
  for (Eigen::Index k = 0; k < asym.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(asym, k); it; ++it) {
      if (std::abs(it.value()) > worst) {
        worst = std::abs(it.value());
        report.offending = std::make_pair(std::min(it.row(), it.col()), std::max(it.row(), it.col()));
      }
    }
  }
  if (worst > 1e-12 * qmax) {
    const auto [i, j] = *report.offending;
    return detail::fail(report, ErrorCode::NotSymmetric,
                        "Q(" + std::to_string(i) + "," + std::to_string(j) + ") != Q(" +
                            std::to_string(j) + "," + std::to_string(i) + ")");
  }
  report.offending.reset();

  // PSD via a Cholesky of Q + 1e-10·trace(Q)/n·I. A PSD matrix with zero
  // trace is the zero matrix.
  const double trace = p.Q.diagonal().sum();
  if (trace < 0.0 || (trace == 0.0 && qmax > 0.0))
    return detail::fail(report, ErrorCode::NotPSD, "Q has nonpositive trace but nonzero entries");
  if (trace > 0.0 && !detail::shifted_cholesky_ok(p.Q, 1e-10 * trace / static_cast<double>(n)))
    return detail::fail(report, ErrorCode::NotPSD, "shifted Cholesky of Q failed");

  return report;
}

inline void validate_or_throw(const QpProblem& p) {
  const ValidationReport r = validate(p);
  if (!r.valid) throw Error(*r.error, r.message);
}

struct FeasibilityReport {
  double primal_res = 0.0;  // ||Ax − b||₂
  double dual_res = 0.0;    // ||Aᵀy + s − Qx − c||₂
  double primal_rel = 0.0;  // primal_res / (1 + ||b||₂)
  double dual_rel = 0.0;    // dual_res / (1 + ||c||₂)

  bool feasible(double tol = 1e-8) const { return primal_rel <= tol && dual_rel <= tol; }
};

struct Measurement {
  FeasibilityReport feasibility;
  double mu = 0.0;
};

inline Measurement measure(const QpProblem& p, const Iterate& it) {
  if (it.n() != p.n() || it.y().size() != p.m())
    throw Error(ErrorCode::DimensionMismatch, "iterate does not match problem dimensions");
  Measurement out;
  out.mu = it.x().dot(it.s()) / static_cast<double>(it.n());
  auto& f = out.feasibility;
  f.primal_res = (p.A * it.x() - p.b).norm();
  f.dual_res = (p.A.transpose() * it.y() + it.s() - p.Q * it.x() - p.c).norm();
  f.primal_rel = f.primal_res / (1.0 + p.b.norm());
  f.dual_rel = f.dual_res / (1.0 + p.c.norm());
  return out;
}

struct ObjectivePair {
  double primal = 0.0;  // cᵀx + ½xᵀQx
  double dual = 0.0;    // bᵀy − ½xᵀQx
  double gap() const { return primal - dual; }
};

inline ObjectivePair objective_pair(const QpProblem& p, const Iterate& it) {
  const double half_xqx = 0.5 * it.x().dot(p.Q * it.x());
  return {p.c.dot(it.x()) + half_xqx, p.b.dot(it.y()) - half_xqx};
}

/// Returns a copy of `p` whose c makes `it` dual feasible: c = Aᵀy + s − Qx.
inline QpProblem with_consistent_c(const QpProblem& p, const Iterate& it) {
  QpProblem out = p;
  out.c = p.A.transpose() * it.y() + it.s() - p.Q * it.x();
  return out;
}

}  // namespace iipm
