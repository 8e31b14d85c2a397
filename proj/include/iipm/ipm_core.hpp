#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "iipm/neighborhood.hpp"
#include "iipm/newton_solver.hpp"
#include "iipm/qp_model.hpp"

namespace iipm {

enum class Variant { ShortStep, LongStep };
enum class StepMode { TheoryFixed, Practical };

constexpr std::string_view to_string(Variant v) { return v == Variant::ShortStep ? "short" : "long"; }

/// Parameters of the two feasible inexact path-following methods. The
/// defaults are the certified constants: theta = beta = 0.1, delta = 0.3 for
/// the short-step method in N₂(theta); gamma = sigma = 0.5, delta = 0.05 for
/// the long-step method in N_S(gamma).
struct SolverConfig {
  Variant variant = Variant::ShortStep;
  double theta = 0.1;
  double beta = 0.1;
  double gamma = 0.5;
  double sigma_long = 0.5;
  double delta = 0.3;
  double epsilon = 1e-6;
  long max_iters = 0;  // 0: derived from the theoretical iteration bound
  InexactnessPolicy inexact;  // its delta is overridden by `delta`
  StepMode step_mode = StepMode::TheoryFixed;
  bool audit = true;

  static SolverConfig short_step() { return {}; }

  static SolverConfig long_step() {
    SolverConfig cfg;
    cfg.variant = Variant::LongStep;
    cfg.delta = 0.05;
    return cfg;
  }

  Norm residual_norm() const { return variant == Variant::ShortStep ? Norm::Two : Norm::Inf; }

  InexactnessPolicy policy() const {
    InexactnessPolicy p = inexact;
    p.delta = delta;
    return p;
  }

  void check() const {
    const auto open_unit = [](double v, const char* name) {
      if (!(v > 0.0 && v < 1.0))
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " must lie in (0, 1)");
    };
    open_unit(theta, "theta");
    open_unit(beta, "beta");
    open_unit(gamma, "gamma");
    open_unit(sigma_long, "sigma_long");
    open_unit(delta, "delta");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    if (!(inexact.inject_fraction >= 0.0 && inexact.inject_fraction <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "inject_fraction must lie in [0, 1]");
  }
};

/// Short-step contraction constant eta = beta(1 − 2 delta − 0.38); the
/// per-iteration guarantee is mu_new ≤ (1 − eta/√n) mu.
inline double shortstep_eta(double beta, double delta) { return beta * (1.0 - 2.0 * delta - 0.38); }

/// Per-iteration observables. The first twelve fields form the CSV trace;
/// the rest are audit diagnostics.
struct TraceRecord {
  long iter = 0;
  double mu = 0.0;  // at the accepted iterate
  double sigma = 0.0;
  double alpha = 0.0;
  double r_ratio = 0.0;
  double prox2 = 0.0;  // ||XSe − mu e||₂ / mu
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double primal_res = 0.0;  // relative, see FeasibilityReport
  double dual_res = 0.0;
  double dxds = 0.0;
  double lemma_slack = 0.0;  // min over active bounds of (bound − measured) / mu_prev

  double mu_prev = 0.0;
  double mu_predicted = 0.0;
  double dxqdx = 0.0;
  double dxds_scale = 0.0;    // ||ΔXΔSe||₁
  double lemma_ratio = 0.0;   // measured / bound for the distance lemma
  double block_primal = 0.0;  // ||AΔx|| relative to its scale
  double block_dual = 0.0;
  double adx_norm = 0.0;  // raw ||AΔx||₂
  double xi_norm = 0.0;
  int inner_iterations = 0;
};

enum class Status { Converged, IterationLimit, AuditViolation, NumericalBreakdown };

constexpr std::string_view to_string(Status s) {
  switch (s) {
    case Status::Converged: return "Converged";
    case Status::IterationLimit: return "IterationLimit";
    case Status::AuditViolation: return "AuditViolation";
    case Status::NumericalBreakdown: return "NumericalBreakdown";
  }
  return "Unknown";
}

struct SolveResult {
  Status status = Status::Converged;
  Iterate final;
  long iterations = 0;
  std::vector<TraceRecord> trace;
  std::string message;
};

/// mu(alpha) = (1 − alpha(1 − sigma)) mu + alpha eᵀr / n + alpha² ΔxᵀΔs / n.
inline double mu_after_step(const Iterate& it, const NewtonDirection& d, double sigma, double alpha) {
  const double n = static_cast<double>(it.n());
  return (1.0 - alpha * (1.0 - sigma)) * it.mu() + alpha * d.r.sum() / n +
         alpha * alpha * d.dx.dot(d.ds) / n;
}

/// Step-length limits of the long-step method. With
///   K = (1 + delta)²/gamma · (1/gamma − sigma)²
/// each neighbourhood/gap condition is linear in alpha:
///   a1: alpha (gamma + n) K ≤ sigma(1 − gamma) − delta(1 + gamma)(1/gamma − sigma)
///   a2: alpha K ≤ (1/gamma − 1) sigma − delta(1 + 1/gamma)(1/gamma − sigma)
///   a3: alpha K ≤ 0.9 − sigma − delta(1/gamma − sigma)
struct AlphaBounds {
  double constant = 0.0;  // K
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double alpha_max = 0.0;  // min(a1, a2, a3, 1)
};

inline double longstep_constant(double gamma, double sigma, double delta) {
  const double spread = 1.0 / gamma - sigma;
  return (1.0 + delta) * (1.0 + delta) / gamma * spread * spread;
}

/// Non-throwing form; alpha_max ≤ 0 flags an infeasible parameter set.
inline AlphaBounds compute_alpha_bounds(long n, double gamma, double sigma, double delta) {
  AlphaBounds b;
  const double spread = 1.0 / gamma - sigma;
  b.constant = longstep_constant(gamma, sigma, delta);
  b.a1 = (sigma * (1.0 - gamma) - delta * (1.0 + gamma) * spread) /
         ((gamma + static_cast<double>(n)) * b.constant);
  b.a2 = ((1.0 / gamma - 1.0) * sigma - delta * (1.0 + 1.0 / gamma) * spread) / b.constant;
  b.a3 = (0.9 - sigma - delta * spread) / b.constant;
  b.alpha_max = std::min({b.a1, b.a2, b.a3, 1.0});
  return b;
}

inline AlphaBounds longstep_alpha_bounds(long n, double gamma, double sigma, double delta) {
  for (double v : {gamma, sigma, delta})
    if (!(v > 0.0 && v < 1.0)) throw Error(ErrorCode::InvalidArgument, "parameters must lie in (0, 1)");
  AlphaBounds b = compute_alpha_bounds(n, gamma, sigma, delta);
  if (b.alpha_max <= 0.0)
    throw Error(ErrorCode::ParamsInfeasible, "no positive step satisfies the long-step conditions");
  return b;
}

/// The certified long-step size 1/(50n).
inline double alpha_hat(long n) { return 1.0 / (50.0 * static_cast<double>(n)); }

/// Theory-derived iteration budget, 20× the worst-case count.
inline long default_iteration_cap(const SolverConfig& cfg, long n, double mu0) {
  const double log_ratio = std::max(1.0, std::log(mu0 / cfg.epsilon));
  double bound;
  if (cfg.variant == Variant::ShortStep) {
    const double eta = shortstep_eta(cfg.beta, cfg.delta);
    bound = std::sqrt(static_cast<double>(n)) * log_ratio / (eta > 0.0 ? eta : 0.002);
  } else {
    bound = log_ratio / (0.1 * alpha_hat(n));
  }
  return 20 * static_cast<long>(std::ceil(bound));
}

struct StepOutcome {
  Iterate next;
  TraceRecord record;
};

namespace detail {

inline constexpr double kAuditSlack = 1e-12;

inline void audit_check(bool ok, const std::string& what, long iter) {
  if (!ok) throw Error(ErrorCode::AuditViolation, "iteration " + std::to_string(iter) + ": " + what);
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

/// Accepted trial point, or nullopt-like failure when it leaves the interior.
inline bool try_step(const Iterate& it, const NewtonDirection& d, double alpha, Vector& x, Vector& y, Vector& s) {
  x = it.x() + alpha * d.dx;
  s = it.s() + alpha * d.ds;
  y = it.y() + alpha * d.dy;
  return (x.array() > 0.0).all() && (s.array() > 0.0).all();
}

/// Checks and records everything that does not depend on the variant.
inline void fill_common(const QpProblem& p, const Iterate& it, const NewtonTarget& t, const NewtonDirection& d,
                        const Iterate& next, double alpha, const SolverConfig& cfg, TraceRecord& rec) {
  const SecondOrder so = second_order_diagnostics(d);
  const ProximityReport prox = proximity(next);
  const Measurement meas = measure(p, next);
  rec.mu = next.mu();
  rec.mu_prev = it.mu();
  rec.sigma = t.sigma;
  rec.alpha = alpha;
  rec.r_ratio = d.r_norm_ratio;
  rec.prox2 = prox.norm2_dev / prox.mu;
  rec.min_ratio = prox.min_ratio;
  rec.max_ratio = prox.max_ratio;
  rec.primal_res = meas.feasibility.primal_rel;
  rec.dual_res = meas.feasibility.dual_rel;
  rec.dxds = so.dxds;
  rec.dxqdx = d.dx.dot(p.Q * d.dx);
  rec.dxds_scale = so.l1;
  rec.mu_predicted = mu_after_step(it, d, t.sigma, alpha);
  rec.xi_norm = norm(t.xi, t.norm);
  rec.inner_iterations = d.inner_iterations;

  const BlockResiduals br = block_residuals(p, it, t, d);
  rec.adx_norm = br.primal;
  const double a_scale = p.A.norm(), q_scale = p.Q.norm();
  rec.block_primal = br.primal / (1.0 + a_scale * d.dx.norm());
  rec.block_dual = br.dual / (1.0 + q_scale * d.dx.norm() + a_scale * d.dy.norm() + d.ds.norm());

  if (!cfg.audit) return;
  const long k = rec.iter;
  audit_check(d.r_norm_ratio <= cfg.delta + kAuditSlack,
              "residual ratio " + fmt(d.r_norm_ratio) + " exceeds delta", k);
  audit_check(rec.block_primal <= 1e-10, "AΔx not zero: " + fmt(rec.block_primal), k);
  audit_check(rec.block_dual <= 1e-10, "dual block residual " + fmt(rec.block_dual), k);
  audit_check(std::abs(so.dxds - rec.dxqdx) <= 1e-8 * std::max(so.l1, 1e-300),
              "ΔxᵀΔs = " + fmt(so.dxds) + " but ΔxᵀQΔx = " + fmt(rec.dxqdx), k);
  audit_check(so.dxds >= -kAuditSlack * std::max(1.0, so.l1), "ΔxᵀΔs negative", k);
  audit_check(meas.feasibility.feasible(1e-8), "feasibility drift " + fmt(rec.primal_res) + ", " +
                                                   fmt(rec.dual_res), k);
  audit_check(std::abs(rec.mu_predicted - rec.mu) <= 1e-9 * rec.mu,
              "predicted mu " + fmt(rec.mu_predicted) + " vs measured " + fmt(rec.mu), k);
}

}  // namespace detail

/// One full Newton step (alpha = 1) with sigma = 1 − beta/√n in N₂(theta).
inline StepOutcome shortstep_iteration(NewtonSolver& solver, const QpProblem& p, const Iterate& it,
                                       const SolverConfig& cfg, long iter = 1) {
  const long n = it.n();
  const double rn = std::sqrt(static_cast<double>(n));
  const double mu = it.mu();
  const NewtonTarget t = assemble_target(it, 1.0 - cfg.beta / rn, Norm::Two);
  const NewtonDirection d = solver.solve(it, t, cfg.policy());

  Vector x, y, s;
  if (!detail::try_step(it, d, 1.0, x, y, s))
    throw Error(cfg.audit ? ErrorCode::AuditViolation : ErrorCode::NumericalBreakdown,
                "iteration " + std::to_string(iter) + ": full step left the positive orthant");
  Iterate next(std::move(x), std::move(y), std::move(s));

  TraceRecord rec;
  rec.iter = iter;
  detail::fill_common(p, it, t, d, next, 1.0, cfg, rec);

  const SecondOrder so = second_order_diagnostics(d);
  const double th2b2 = cfg.theta * cfg.theta + cfg.beta * cfg.beta;
  const double lemma1 = (1.0 + cfg.delta) * (1.0 + cfg.delta) * th2b2 / (1.0 - cfg.theta) * mu;
  const double etr_bound = cfg.delta * std::sqrt(th2b2) * mu / rn;
  const double etr = std::abs(d.r.sum() / static_cast<double>(n));
  const double contraction = (1.0 - shortstep_eta(cfg.beta, cfg.delta) / rn) * mu;
  const double prox_bound = cfg.theta * next.mu();
  const double prox_measured = rec.prox2 * next.mu();

  rec.lemma_ratio = so.l2 / lemma1;
  rec.lemma_slack = std::min({lemma1 - so.l2, etr_bound - etr, contraction - next.mu(), prox_bound - prox_measured}) / mu;

  if (cfg.audit) {
    detail::audit_check(so.l2 <= lemma1 + detail::kAuditSlack,
                        "||ΔXΔSe|| = " + detail::fmt(so.l2) + " above distance bound " + detail::fmt(lemma1), iter);
    detail::audit_check(etr <= etr_bound + detail::kAuditSlack, "|eᵀr/n| = " + detail::fmt(etr) + " above bound", iter);
    detail::audit_check(next.mu() <= contraction + detail::kAuditSlack,
                        "mu " + detail::fmt(next.mu()) + " above contraction bound " + detail::fmt(contraction), iter);
    detail::audit_check(prox_measured <= prox_bound + detail::kAuditSlack, "left N2(theta)", iter);
  }
  return {std::move(next), rec};
}

/// Long-step iteration in N_S(gamma): fixed alpha = 1/(50n) in TheoryFixed
/// mode, halving backtracking from 1 (floored at 1/(50n)) in Practical mode.
inline StepOutcome longstep_iteration(NewtonSolver& solver, const QpProblem& p, const Iterate& it,
                                      const SolverConfig& cfg, long iter = 1) {
  const long n = it.n();
  const double mu = it.mu();
  const double a_hat = alpha_hat(n);
  const NewtonTarget t = assemble_target(it, cfg.sigma_long, Norm::Inf);
  const NewtonDirection d = solver.solve(it, t, cfg.policy());

  const auto acceptable = [&](const Iterate& trial, double alpha) {
    return in_ns(proximity(trial), cfg.gamma, detail::kAuditSlack) &&
           trial.mu() <= (1.0 - 0.1 * alpha) * mu + detail::kAuditSlack;
  };

  Vector x, y, s;
  double alpha = a_hat;
  if (cfg.step_mode == StepMode::Practical) {
    alpha = 1.0;
    bool accepted = false;
    while (!accepted) {
      if (detail::try_step(it, d, alpha, x, y, s)) {
        if (acceptable(Iterate(x, y, s), alpha)) {
          accepted = true;
          break;
        }
      }
      if (alpha == a_hat) break;
      alpha = std::max(0.5 * alpha, a_hat);
    }
    if (!accepted)
      throw Error(ErrorCode::StepsizeUnderflow,
                  "iteration " + std::to_string(iter) + ": even alpha = 1/(50n) was rejected");
  } else if (!detail::try_step(it, d, alpha, x, y, s)) {
    throw Error(cfg.audit ? ErrorCode::AuditViolation : ErrorCode::NumericalBreakdown,
                "iteration " + std::to_string(iter) + ": step left the positive orthant");
  }
  Iterate next(std::move(x), std::move(y), std::move(s));

  TraceRecord rec;
  rec.iter = iter;
  detail::fill_common(p, it, t, d, next, alpha, cfg, rec);

  const SecondOrder so = second_order_diagnostics(d);
  const double K = longstep_constant(cfg.gamma, cfg.sigma_long, cfg.delta);
  const double l1_bound = static_cast<double>(n) * K * mu;
  const double comp_bound = K * mu;
  const double gap_bound = (1.0 - 0.1 * alpha) * mu;
  const ProximityReport prox = proximity(next);

  rec.lemma_ratio = std::max(so.l1 / l1_bound, so.max_product / comp_bound);
  rec.lemma_slack = std::min({l1_bound - so.l1, comp_bound - so.max_product, gap_bound - next.mu(),
                              (prox.min_ratio - cfg.gamma) * next.mu(),
                              (1.0 / cfg.gamma - prox.max_ratio) * next.mu()}) /
                    mu;

  if (cfg.audit) {
    detail::audit_check(so.l1 <= l1_bound + detail::kAuditSlack,
                        "||ΔXΔSe||₁ = " + detail::fmt(so.l1) + " above bound " + detail::fmt(l1_bound), iter);
    detail::audit_check(so.max_product <= comp_bound + detail::kAuditSlack,
                        "max Δx_jΔs_j = " + detail::fmt(so.max_product) + " above bound", iter);
    detail::audit_check(next.mu() <= gap_bound + detail::kAuditSlack,
                        "mu " + detail::fmt(next.mu()) + " above (1 − 0.1 alpha) mu", iter);
    detail::audit_check(in_ns(prox, cfg.gamma, detail::kAuditSlack), "left N_S(gamma)", iter);
  }
  return {std::move(next), rec};
}

inline StepOutcome shortstep_iteration(const QpProblem& p, const Iterate& it, const SolverConfig& cfg) {
  NewtonSolver solver(p, cfg.inexact.seed);
  return shortstep_iteration(solver, p, it, cfg);
}

inline StepOutcome longstep_iteration(const QpProblem& p, const Iterate& it, const SolverConfig& cfg) {
  NewtonSolver solver(p, cfg.inexact.seed);
  return longstep_iteration(solver, p, it, cfg);
}

/// Composite neighbourhood membership: feasibility, interiority and the
/// variant's proximity test.
inline bool in_neighbourhood(const QpProblem& p, const Iterate& it, const SolverConfig& cfg,
                             double slack = detail::kAuditSlack) {
  if (!measure(p, it).feasibility.feasible(1e-8)) return false;
  const ProximityReport prox = proximity(it);
  return cfg.variant == Variant::ShortStep ? in_n2(prox, cfg.theta, slack) : in_ns(prox, cfg.gamma, slack);
}

/// Iterates until mu ≤ epsilon or the iteration cap. Audit violations and
/// numerical failures end the run with the corresponding status; the trace
/// holds every accepted iteration.
inline SolveResult run(const QpProblem& p, const Iterate& start, const SolverConfig& cfg) {
  cfg.check();
  validate_or_throw(p);
  if (start.n() != p.n() || start.y().size() != p.m())
    throw Error(ErrorCode::DimensionMismatch, "start does not match problem dimensions");
  if (!in_neighbourhood(p, start, cfg))
    throw Error(ErrorCode::StartOutsideNeighbourhood,
                std::string("start is not a feasible member of ") +
                    (cfg.variant == Variant::ShortStep ? "N2(theta)" : "N_S(gamma)"));
  const long n = p.n();
  if (cfg.variant == Variant::ShortStep && cfg.audit && shortstep_eta(cfg.beta, cfg.delta) <= 0.0)
    throw Error(ErrorCode::ParamsInfeasible, "beta(1 − 2 delta − 0.38) must be positive");
  if (cfg.variant == Variant::LongStep) {
    const AlphaBounds bounds = longstep_alpha_bounds(n, cfg.gamma, cfg.sigma_long, cfg.delta);
    if (alpha_hat(n) > bounds.alpha_max)
      throw Error(ErrorCode::ParamsInfeasible, "1/(50n) exceeds the admissible step " + detail::fmt(bounds.alpha_max));
  }

  SolveResult result{Status::Converged, start, 0, {}, {}};
  const long cap = cfg.max_iters > 0 ? cfg.max_iters : default_iteration_cap(cfg, n, start.mu());
  NewtonSolver solver(p, cfg.inexact.seed);

  while (result.final.mu() > cfg.epsilon) {
    if (result.iterations >= cap) {
      result.status = Status::IterationLimit;
      result.message = "iteration cap " + std::to_string(cap) + " reached";
      return result;
    }
    try {
      StepOutcome step = cfg.variant == Variant::ShortStep
                             ? shortstep_iteration(solver, p, result.final, cfg, result.iterations + 1)
                             : longstep_iteration(solver, p, result.final, cfg, result.iterations + 1);
      result.final = std::move(step.next);
      result.trace.push_back(step.record);
      ++result.iterations;
    } catch (const Error& e) {
      const bool theory = e.code() == ErrorCode::AuditViolation || e.code() == ErrorCode::StepsizeUnderflow;
      result.status = theory ? Status::AuditViolation : Status::NumericalBreakdown;
      result.message = e.what();
      return result;
    }
  }
  result.status = Status::Converged;
  return result;
}

}  // namespace iipm
