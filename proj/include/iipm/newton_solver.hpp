#pragma once

#include <cstdint>
#include <optional>
#include <tuple>

#include "iipm/augmented_system.hpp"
#include "iipm/qp_model.hpp"

namespace iipm {

/// Right-hand side of the complementarity block, xi = sigma·mu·e − XSe.
struct NewtonTarget {
  Vector xi;
  double sigma = 1.0;
  Norm norm = Norm::Two;
};

inline NewtonTarget assemble_target(const Iterate& it, double sigma, Norm p) {
  if (!(sigma > 0.0 && sigma <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "sigma must lie in (0, 1]");
  NewtonTarget t;
  t.sigma = sigma;
  t.norm = p;
  t.xi = (sigma * it.mu() - it.products().array()).matrix();
  return t;
}

/// One (possibly inexact) Newton direction. The first two block equations
///   AΔx = 0,   −QΔx + AᵀΔy + Δs = 0
/// hold to roundoff; the third carries the residual r:
///   SΔx + XΔs = xi + r.
struct NewtonDirection {
  Vector dx, dy, ds;
  Vector r;
  double r_norm_ratio = 0.0;  // ||r||_p / ||xi||_p, 0 when xi = 0
  int inner_iterations = 0;   // iterative mode only
};

enum class InexactMode { Exact, Inject, Iterative };
enum class InjectShape { RandomSphere, AdversarialSign, AlignedWithXi };

/// How the residual r is realized. In Inject mode r is chosen explicitly
/// with ||r||_p = inject_fraction · delta · ||xi||_p and the system is solved
/// exactly with xi + r on the right; in Iterative mode r is whatever a
/// truncated projected Krylov solve leaves behind, with ||r||_p ≤ delta ||xi||_p.
struct InexactnessPolicy {
  InexactMode mode = InexactMode::Exact;
  double delta = 0.0;
  InjectShape inject_shape = InjectShape::RandomSphere;
  double inject_fraction = 1.0;
  std::uint64_t seed = 0;
};

struct BlockResiduals {
  double primal = 0.0;  // ||AΔx||₂
  double dual = 0.0;    // ||−QΔx + AᵀΔy + Δs||₂
  double comp = 0.0;    // ||SΔx + XΔs − xi − r||₂
};

inline BlockResiduals block_residuals(const QpProblem& p, const Iterate& it, const NewtonTarget& t,
                                      const NewtonDirection& d) {
  BlockResiduals out;
  out.primal = (p.A * d.dx).norm();
  out.dual = (-(p.Q * d.dx) + p.A.transpose() * d.dy + d.ds).norm();
  out.comp = (it.s().cwiseProduct(d.dx) + it.x().cwiseProduct(d.ds) - t.xi - d.r).norm();
  return out;
}

/// Quantities of ΔXΔSe used by the distance lemmas.
struct SecondOrder {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double max_product = 0.0;  // max_j Δx_j Δs_j (signed)
  double dxds = 0.0;         // ΔxᵀΔs
};

inline SecondOrder second_order_diagnostics(const NewtonDirection& d) {
  const Vector prod = d.dx.cwiseProduct(d.ds);
  SecondOrder out;
  out.l1 = prod.lpNorm<1>();
  out.l2 = prod.norm();
  out.linf = prod.size() ? prod.lpNorm<Eigen::Infinity>() : 0.0;
  out.max_product = prod.size() ? prod.maxCoeff() : 0.0;
  out.dxds = d.dx.dot(d.ds);
  return out;
}

/// Newton-system solver bound to one problem. Holds the augmented-system
/// factorization workspace and the random stream used for residual injection,
/// so it is reentrant per instance but not shareable across threads.
class NewtonSolver {
 public:
  explicit NewtonSolver(const QpProblem& problem, std::uint64_t seed = 0)
      : problem_(problem), kkt_(problem), rng_(seed) {}

  /// Exact direction (r = 0) through the augmented system.
  NewtonDirection solve_exact(const Iterate& it, const NewtonTarget& t) {
    return solve_with_residual(it, t, Vector::Zero(it.n()));
  }

  /// Chooses r according to the policy, then solves exactly with xi + r.
  NewtonDirection inject_residual(const Iterate& it, const NewtonTarget& t,
                                  const InexactnessPolicy& policy) {
    if (!(policy.delta >= 0.0 && policy.delta < 1.0))
      throw Error(ErrorCode::InvalidArgument, "delta must lie in [0, 1)");
    return solve_with_residual(it, t, choose_residual(t, policy));
  }

  /// Truncated constraint-preconditioned projected CG on the augmented system.
  /// Inner iterates keep AΔx = 0, so r_y = 0 up to roundoff; the loop stops as
  /// soon as ||X r_x||_p ≤ delta ||xi||_p, r_x being the first-block residual.
  NewtonDirection solve_iterative(const Iterate& it, const NewtonTarget& t,
                                  const InexactnessPolicy& policy);

  NewtonDirection solve(const Iterate& it, const NewtonTarget& t, const InexactnessPolicy& policy) {
    switch (policy.mode) {
      case InexactMode::Exact: return solve_exact(it, t);
      case InexactMode::Inject: return inject_residual(it, t, policy);
      case InexactMode::Iterative: return solve_iterative(it, t, policy);
    }
    return solve_exact(it, t);
  }

  /// Residual vector for the policy's shape with ||r||_p = fraction·delta·||xi||_p.
  Vector choose_residual(const NewtonTarget& t, const InexactnessPolicy& policy) {
    const Eigen::Index n = t.xi.size();
    const double target = policy.inject_fraction * policy.delta * norm(t.xi, t.norm);
    Vector r = Vector::Zero(n);
    if (target == 0.0) return r;
    switch (policy.inject_shape) {
      case InjectShape::RandomSphere: {
        for (Eigen::Index j = 0; j < n; ++j) r[j] = rng_.normal();
        r *= target / norm(r, t.norm);
        break;
      }
      case InjectShape::AdversarialSign: {
        // r_j = −sign(xi_j)·c, every component at full magnitude.
        const double c = t.norm == Norm::Inf ? target : target / std::sqrt(static_cast<double>(n));
        for (Eigen::Index j = 0; j < n; ++j) r[j] = t.xi[j] > 0.0 ? -c : c;
        break;
      }
      case InjectShape::AlignedWithXi:
        r = (policy.inject_fraction * policy.delta) * t.xi;
        break;
    }
    return r;
  }

 private:
  NewtonDirection solve_with_residual(const Iterate& it, const NewtonTarget& t, Vector r) {
    const Vector& x = it.x();
    const Vector& s = it.s();
    kkt_.factorize(s.cwiseQuotient(x));
    const Vector rhs3 = t.xi + r;
    // [−Q−Θ⁻¹ Aᵀ; A 0][Δx; Δy] = [−X⁻¹(xi + r); 0], then Δs from the third block.
    auto [dx, dy] = kkt_.solve(-rhs3.cwiseQuotient(x), Vector::Zero(problem_.m()));
    NewtonDirection d;
    d.ds = (rhs3 - s.cwiseProduct(dx)).cwiseQuotient(x);
    d.dx = std::move(dx);
    d.dy = std::move(dy);
    const double xi_norm = norm(t.xi, t.norm);
    d.r_norm_ratio = xi_norm > 0.0 ? norm(r, t.norm) / xi_norm : 0.0;
    d.r = std::move(r);
    return d;
  }

  const QpProblem& problem_;
  AugmentedSystem kkt_;
  SplitMix64 rng_;
};

inline NewtonDirection NewtonSolver::solve_iterative(const Iterate& it, const NewtonTarget& t,
                                                     const InexactnessPolicy& policy) {
  if (!(policy.delta >= 0.0 && policy.delta < 1.0))
    throw Error(ErrorCode::InvalidArgument, "delta must lie in [0, 1)");
  const Eigen::Index n = problem_.n(), m = problem_.m();
  const Vector& x = it.x();
  const Vector& s = it.s();

  NewtonDirection d;
  d.dx = Vector::Zero(n);
  d.dy = Vector::Zero(m);
  d.ds = Vector::Zero(n);
  d.r = Vector::Zero(n);

  const double xi_norm = norm(t.xi, t.norm);
  if (xi_norm == 0.0) return d;
  const double tol = policy.delta * xi_norm;

  // Solve HΔx − AᵀΔy = g, AΔx = 0 with H = Q + Θ⁻¹ and g = X⁻¹xi.
  const Vector theta_inv = s.cwiseQuotient(x);
  const Vector g = t.xi.cwiseQuotient(x);
  const auto apply_h = [&](const Vector& v) -> Vector {
    return problem_.Q * v + theta_inv.cwiseProduct(v);
  };
  const Vector precond = problem_.Q.diagonal() + theta_inv;
  const NullSpaceProjector projector(problem_, precond);

  // rho tracks HΔx − g − AᵀΔy; the realized third-block residual is r = Xrho.
  Vector rho = -g;
  auto [z, w] = projector.project(rho);
  rho -= problem_.A.transpose() * w;
  d.dy += w;
  Vector p = -z;
  double rz = rho.dot(z);

  const int max_inner = static_cast<int>(10 * (n + m));
  for (int k = 0;; ++k) {
    if (norm(x.cwiseProduct(rho), t.norm) <= tol) {
      // Confirm on a freshly computed residual after cleaning AΔx.
      d.dx = projector.clean(d.dx);
      const Vector true_rho = apply_h(d.dx) - g - problem_.A.transpose() * d.dy;
      if (norm(x.cwiseProduct(true_rho), t.norm) <= tol) {
        d.inner_iterations = k;
        break;
      }
      // Recurrence drifted; restart from the true residual.
      rho = true_rho;
      std::tie(z, w) = projector.project(rho);
      rho -= problem_.A.transpose() * w;
      d.dy += w;
      p = -z;
      rz = rho.dot(z);
    }
    if (k >= max_inner)
      throw Error(ErrorCode::MaxInnerIterations,
                  "projected CG hit " + std::to_string(max_inner) + " inner iterations");
    const Vector hp = apply_h(p);
    const double curvature = p.dot(hp);
    if (!(curvature > 0.0) || !std::isfinite(curvature))
      throw Error(ErrorCode::SingularSystem, "nonpositive curvature in projected CG");
    const double alpha = rz / curvature;
    d.dx += alpha * p;
    rho += alpha * hp;
    std::tie(z, w) = projector.project(rho);
    rho -= problem_.A.transpose() * w;
    d.dy += w;
    const double rz_next = rho.dot(z);
    p = -z + (rz_next / rz) * p;
    rz = rz_next;
  }

  // Second block exact, error confined to the third.
  d.ds = problem_.Q * d.dx - problem_.A.transpose() * d.dy;
  d.r = s.cwiseProduct(d.dx) + x.cwiseProduct(d.ds) - t.xi;
  d.r_norm_ratio = norm(d.r, t.norm) / xi_norm;
  return d;
}

inline NewtonDirection solve_exact(const QpProblem& p, const Iterate& it, const NewtonTarget& t) {
  return NewtonSolver(p).solve_exact(it, t);
}

inline NewtonDirection inject_residual(const QpProblem& p, const Iterate& it, const NewtonTarget& t,
                                       const InexactnessPolicy& policy) {
  return NewtonSolver(p, policy.seed).inject_residual(it, t, policy);
}

inline NewtonDirection solve_iterative(const QpProblem& p, const Iterate& it, const NewtonTarget& t,
                                       const InexactnessPolicy& policy) {
  return NewtonSolver(p, policy.seed).solve_iterative(it, t, policy);
}

}  // namespace iipm
