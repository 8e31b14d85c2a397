#pragma once

#include <limits>
#include <memory>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "iipm/qp_model.hpp"

namespace iipm {

/// Factorization of the augmented (saddle-point) matrix
///
///   K = [ −Q − Θ⁻¹   Aᵀ ]
///       [    A       0  ]
///
/// for the current scaling Θ⁻¹ = SX⁻¹. K is symmetric indefinite with
/// inertia (n, m) whenever A has full row rank.
///
/// Dense path (n ≤ kDenseThreshold): block LDLᵀ built from
/// chol(H), H = Q + Θ⁻¹, and chol(A H⁻¹ Aᵀ), i.e.
///   K = [L₁ 0; W L₂] · diag(−I, I) · [L₁ 0; W L₂]ᵀ,  W = A L₁⁻ᵀ.
/// Sparse path: LDLᵀ of K with every primal index ordered before every dual
/// index (AMD within the H block). The primal pivots are then those of
/// −chol(H) and the dual pivots those of A H⁻¹ Aᵀ, so no pivot is tiny
/// unless the problem itself is ill conditioned; letting a general fill
/// ordering interleave the blocks can put a zero dual diagonal first.
/// Both paths finish with iterative refinement.
class AugmentedSystem {
 public:
  explicit AugmentedSystem(const QpProblem& problem)
      : problem_(problem), dense_(problem.n() <= kDenseThreshold) {
    if (dense_) {
      A_ = DenseMatrix(problem.A);
      Q_ = DenseMatrix(problem.Q);
    }
  }

  bool dense() const { return dense_; }

  /// Factorizes K for the diagonal Θ⁻¹. Throws SingularSystem on breakdown.
  void factorize(const Vector& theta_inv) {
    theta_inv_ = theta_inv;
    if (dense_)
      factorize_dense();
    else
      factorize_sparse();
  }

  /// Solves K [u; v] = [f; g]. Returns (u, v).
  std::pair<Vector, Vector> solve(const Vector& f, const Vector& g) const {
    auto [u, v] = raw_solve(f, g);
    const double scale = f.norm() + g.norm();
    double prev = std::numeric_limits<double>::infinity();
    Vector du, dv;
    for (int step = 0; step < kMaxRefinement; ++step) {
      auto [ru, rv] = residual(u, v, f, g);
      const double res = std::sqrt(ru.squaredNorm() + rv.squaredNorm());
      if (!std::isfinite(res)) throw Error(ErrorCode::SingularSystem, "non-finite augmented solve");
      if (res <= 1e-15 * (1.0 + scale)) break;
      if (res > 0.5 * prev) {
        // Stagnated at roundoff level; undo the last correction if it hurt.
        if (res > prev) {
          u -= du;
          v -= dv;
        }
        break;
      }
      prev = res;
      std::tie(du, dv) = raw_solve(ru, rv);
      u += du;
      v += dv;
    }
    return {std::move(u), std::move(v)};
  }

  /// f − (−Hu + Aᵀv), g − Au.
  std::pair<Vector, Vector> residual(const Vector& u, const Vector& v, const Vector& f,
                                     const Vector& g) const {
    Vector ru = f - (-(problem_.Q * u) - theta_inv_.cwiseProduct(u) + problem_.A.transpose() * v);
    Vector rv = g - problem_.A * u;
    return {std::move(ru), std::move(rv)};
  }

 private:
  static constexpr int kMaxRefinement = 20;

  /// Fill-reducing order of H followed by the dual indices, as the new
  /// position of each original index.
  void compute_ordering() {
    const Eigen::Index n = problem_.n(), m = problem_.m();
    SparseMatrix pattern = problem_.Q;
    for (Eigen::Index j = 0; j < n; ++j) pattern.coeffRef(j, j) += 1.0;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> amd;
    Eigen::AMDOrdering<int>()(pattern.selfadjointView<Eigen::Lower>(), amd);
    const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> inverse = amd.inverse();
    position_.resize(n + m);
    for (Eigen::Index j = 0; j < n; ++j) position_[j] = inverse.indices()[j];
    for (Eigen::Index i = 0; i < m; ++i) position_[n + i] = static_cast<int>(n + i);
  }

  void factorize_dense() {
    DenseMatrix H = Q_;
    H.diagonal() += theta_inv_;
    h_llt_.compute(H);
    if (h_llt_.info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "Q + Θ⁻¹ is not positive definite");
    // W = L₁⁻¹ Aᵀ so that A H⁻¹ Aᵀ = Wᵀ W.
    w_ = h_llt_.matrixL().solve(A_.transpose());
    DenseMatrix schur = DenseMatrix::Zero(A_.rows(), A_.rows());
    schur.selfadjointView<Eigen::Lower>().rankUpdate(w_.transpose());
    s_llt_.compute(schur);
    if (s_llt_.info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "Schur complement A H⁻¹ Aᵀ is singular");
  }

  void factorize_sparse() {
    const Eigen::Index n = problem_.n(), m = problem_.m();
    if (position_.size() == 0) compute_ordering();
    // Lower triangle of P K Pᵀ.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(problem_.Q.nonZeros() + problem_.A.nonZeros() + n);
    const auto put = [&](Eigen::Index i, Eigen::Index j, double v) {
      const int pi = position_[i], pj = position_[j];
      if (pi >= pj) trips.emplace_back(pi, pj, v);
      else trips.emplace_back(pj, pi, v);
    };
    for (Eigen::Index k = 0; k < problem_.Q.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(problem_.Q, k); it; ++it)
        if (it.row() >= it.col()) put(it.row(), it.col(), -it.value());
    for (Eigen::Index j = 0; j < n; ++j) put(j, j, -theta_inv_[j]);
    for (Eigen::Index k = 0; k < problem_.A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(problem_.A, k); it; ++it) put(n + it.row(), it.col(), it.value());
    SparseMatrix K(n + m, n + m);
    K.setFromTriplets(trips.begin(), trips.end());
    if (!ldlt_) {
      ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>>>();
      ldlt_->analyzePattern(K);
    }
    ldlt_->factorize(K);
    if (ldlt_->info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "augmented LDLᵀ broke down");
  }

  std::pair<Vector, Vector> raw_solve(const Vector& f, const Vector& g) const {
    const Eigen::Index n = problem_.n(), m = problem_.m();
    if (dense_) {
      // v = S⁻¹(g + A H⁻¹ f), u = H⁻¹(Aᵀv − f)
      const Vector hf = h_llt_.solve(f);
      Vector v = s_llt_.solve(g + A_ * hf);
      Vector u = h_llt_.solve(A_.transpose() * v - f);
      return {std::move(u), std::move(v)};
    }
    Vector rhs(n + m);
    for (Eigen::Index j = 0; j < n; ++j) rhs[position_[j]] = f[j];
    for (Eigen::Index i = 0; i < m; ++i) rhs[position_[n + i]] = g[i];
    const Vector sol = ldlt_->solve(rhs);
    Vector u(n), v(m);
    for (Eigen::Index j = 0; j < n; ++j) u[j] = sol[position_[j]];
    for (Eigen::Index i = 0; i < m; ++i) v[i] = sol[position_[n + i]];
    return {std::move(u), std::move(v)};
  }

  const QpProblem& problem_;
  bool dense_;
  DenseMatrix A_, Q_;
  Vector theta_inv_;

  Eigen::LLT<DenseMatrix> h_llt_;
  Eigen::LLT<DenseMatrix> s_llt_;
  DenseMatrix w_;

  Eigen::VectorXi position_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>>> ldlt_;
};

/// Factorization of A D⁻¹ Aᵀ for a positive diagonal D, used to apply the
/// D-orthogonal projection onto null(A):
///   z = D⁻¹(ρ − Aᵀw),  w = (A D⁻¹ Aᵀ)⁻¹ A D⁻¹ ρ.
class NullSpaceProjector {
 public:
  NullSpaceProjector(const QpProblem& problem, const Vector& d)
      : problem_(problem), d_inv_(d.cwiseInverse()) {
    const SparseMatrix scaled = problem.A * d_inv_.asDiagonal();
    const SparseMatrix M = scaled * problem.A.transpose();
    if (problem.n() <= kDenseThreshold) {
      dense_.compute(DenseMatrix(M));
      if (dense_.info() != Eigen::Success)
        throw Error(ErrorCode::SingularSystem, "A D⁻¹ Aᵀ is singular");
    } else {
      sparse_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(M);
      if (sparse_->info() != Eigen::Success)
        throw Error(ErrorCode::SingularSystem, "A D⁻¹ Aᵀ is singular");
    }
  }

  /// Returns (z, w).
  std::pair<Vector, Vector> project(const Vector& rho) const {
    const Vector rhs = problem_.A * d_inv_.cwiseProduct(rho);
    Vector w = sparse_ ? Vector(sparse_->solve(rhs)) : Vector(dense_.solve(rhs));
    Vector z = d_inv_.cwiseProduct(rho - problem_.A.transpose() * w);
    return {std::move(z), std::move(w)};
  }

  /// Removes the range(D⁻¹Aᵀ) component of v, so that A v ≈ 0.
  Vector clean(const Vector& v) const {
    const Vector rhs = problem_.A * v;
    const Vector w = sparse_ ? Vector(sparse_->solve(rhs)) : Vector(dense_.solve(rhs));
    return v - d_inv_.cwiseProduct(problem_.A.transpose() * w);
  }

 private:
  const QpProblem& problem_;
  Vector d_inv_;
  Eigen::LLT<DenseMatrix> dense_;
  std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> sparse_;
};

}  // namespace iipm
