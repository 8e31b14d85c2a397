#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace iipm;
using iipm::testing::vec;

namespace {

SolverConfig short_cfg(InexactMode mode, double delta = 0.3, InjectShape shape = InjectShape::RandomSphere) {
  SolverConfig cfg = SolverConfig::short_step();
  cfg.delta = delta;
  cfg.inexact.mode = mode;
  cfg.inexact.inject_shape = shape;
  cfg.inexact.seed = 17;
  return cfg;
}

SolverConfig long_cfg(InexactMode mode, double delta = 0.05, InjectShape shape = InjectShape::AdversarialSign) {
  SolverConfig cfg = SolverConfig::long_step();
  cfg.delta = delta;
  cfg.inexact.mode = mode;
  cfg.inexact.inject_shape = shape;
  cfg.inexact.seed = 23;
  return cfg;
}

}  // namespace

TEST(MuAfterStep, ZeroStepKeepsMu) {
  const Iterate it(vec({1, 2}), vec({0}), vec({1.5, 0.25}));
  NewtonDirection d;
  d.dx = vec({0.3, -0.1});
  d.ds = vec({0.2, 0.7});
  d.r = vec({0.01, 0.02});
  EXPECT_DOUBLE_EQ(mu_after_step(it, d, 0.4, 0.0), it.mu());
}

TEST(MuAfterStep, ExactOrthogonalFullStepGivesSigmaMu) {
  const Iterate it(vec({1, 1}), vec({0}), vec({1, 1}));
  NewtonDirection d;
  d.dx = vec({1, -1});
  d.ds = vec({1, 1});
  d.r = Vector::Zero(2);
  EXPECT_DOUBLE_EQ(mu_after_step(it, d, 0.5, 1.0), 0.5);
}

TEST(MuAfterStep, HandPluggedValue) {
  // mu = 1, n = 2, sigma = 0.5, alpha = 0.5, eᵀr = 0.02, ΔxᵀΔs = 0.04 → 0.76.
  const Iterate it(vec({1, 1}), vec({0}), vec({1, 1}));
  NewtonDirection d;
  d.dx = vec({0.2, 0.2});
  d.ds = vec({0.1, 0.1});
  d.r = vec({0.01, 0.01});
  EXPECT_NEAR(mu_after_step(it, d, 0.5, 0.5), 0.76, 1e-15);
}

TEST(MuAfterStep, AgreesWithDirectEvaluation) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto inst = generate({12, 5, 1.0, 4, 1.0, seed});
    const Iterate it = perturb_within(inst.start, {Hood::N2, 0.1}, 1.0, seed);
    const QpProblem p = with_consistent_c(inst.problem, it);
    const NewtonTarget t = assemble_target(it, 0.6, Norm::Two);
    InexactnessPolicy pol;
    pol.mode = InexactMode::Inject;
    pol.delta = 0.3;
    pol.seed = seed;
    const NewtonDirection d = inject_residual(p, it, t, pol);
    for (double alpha : {0.1, 0.5, 1.0}) {
      const Vector x = it.x() + alpha * d.dx, s = it.s() + alpha * d.ds;
      EXPECT_NEAR(mu_after_step(it, d, 0.6, alpha), x.dot(s) / 12.0, 1e-12 * it.mu());
    }
  }
}

TEST(Constants, ShortStepEta) {
  EXPECT_NEAR(shortstep_eta(0.1, 0.3), 0.002, 1e-15);
  EXPECT_LT(shortstep_eta(0.1, 0.4), 0.0);
}

TEST(Constants, LongStepBoundsAtDefaults) {
  const AlphaBounds b = longstep_alpha_bounds(2, 0.5, 0.5, 0.05);
  EXPECT_NEAR(b.constant, 4.96125, 1e-12);
  EXPECT_NEAR(b.a1, 0.0110859158478206, 1e-15);
  EXPECT_NEAR(b.a2, 0.0554295792391030, 1e-15);
  EXPECT_NEAR(b.a3, 0.0655076845553036, 1e-15);
  EXPECT_DOUBLE_EQ(b.alpha_max, b.a1);
  EXPECT_GE(b.a1, alpha_hat(2));
}

TEST(Constants, LargeDeltaIsInfeasible) {
  try {
    longstep_alpha_bounds(4, 0.5, 0.5, 0.9);
    FAIL() << "expected ParamsInfeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParamsInfeasible);
  }
  EXPECT_LE(compute_alpha_bounds(4, 0.5, 0.5, 0.9).alpha_max, 0.0);
}

TEST(ShortStep, ExactCentralIterationContracts) {
  const auto inst = generate({4, 2, 1.0, 2, 1.0, 1});
  const auto step = shortstep_iteration(inst.problem, inst.start, short_cfg(InexactMode::Exact));
  const double mu = inst.start.mu(), sigma = 1.0 - 0.1 / 2.0;
  EXPECT_GE(step.next.mu(), sigma * mu - 1e-14);
  EXPECT_LE(step.next.mu(), (1.0 - 0.002 / 2.0) * mu);
  EXPECT_TRUE(in_n2(step.next, 0.1));
}

TEST(ShortStep, AdversarialInjectionStaysInN2) {
  const auto inst = generate({4, 2, 1.0, 2, 1.0, 2});
  SolverConfig cfg = short_cfg(InexactMode::Inject, 0.3, InjectShape::AdversarialSign);
  cfg.max_iters = 100;
  cfg.epsilon = 1e-300;
  const SolveResult res = run(inst.problem, inst.start, cfg);
  EXPECT_EQ(res.status, Status::IterationLimit) << res.message;
  ASSERT_EQ(res.trace.size(), 100u);
  for (const TraceRecord& r : res.trace) {
    EXPECT_LE(r.prox2, 0.1 + 1e-12);
    EXPECT_LE(r.mu, (1.0 - 0.002 / 2.0) * r.mu_prev + 1e-12);
    EXPECT_GE(r.lemma_slack, -1e-12);
  }
}

TEST(ShortStep, IterationCountNearContractionEstimate) {
  // mu ≥ sigma·mu per step forces L ≥ 270; the certified rate caps L at 13816.
  const auto inst = generate({4, 2, 1.0, 2, 1.0, 3});
  const SolveResult res = run(inst.problem, inst.start, short_cfg(InexactMode::Exact));
  ASSERT_EQ(res.status, Status::Converged) << res.message;
  EXPECT_GE(res.iterations, 270);
  EXPECT_LE(res.iterations, 297);  // within 10% of the first-order estimate
  EXPECT_LE(res.iterations, 13816);
}

TEST(ShortStep, MuStrictlyDecreases) {
  const auto inst = generate({16, 6, 1.0, 4, 2.0, 4});
  SolverConfig cfg = short_cfg(InexactMode::Iterative);
  cfg.epsilon = 1e-3;
  const SolveResult res = run(inst.problem, inst.start, cfg);
  ASSERT_EQ(res.status, Status::Converged) << res.message;
  double prev = inst.start.mu();
  for (const TraceRecord& r : res.trace) {
    EXPECT_LT(r.mu, prev);
    prev = r.mu;
  }
  EXPECT_LE(res.final.mu(), 1e-3);
  EXPECT_TRUE(measure(inst.problem, res.final).feasibility.feasible(1e-8));
}

TEST(LongStep, TheoryFixedGapReduction) {
  const auto inst = generate({8, 3, 1.0, 3, 1.0, 5});
  SolverConfig cfg = long_cfg(InexactMode::Exact);
  cfg.max_iters = 300;
  cfg.epsilon = 1e-300;
  const SolveResult res = run(inst.problem, inst.start, cfg);
  EXPECT_EQ(res.status, Status::IterationLimit) << res.message;
  for (const TraceRecord& r : res.trace) {
    EXPECT_EQ(r.alpha, 1.0 / 400.0);
    EXPECT_LE(r.mu, (1.0 - 0.1 / 400.0) * r.mu_prev + 1e-12);
  }
}

TEST(LongStep, AdversarialInjectionStaysInNs) {
  const auto inst = generate({8, 3, 1.0, 3, 1.0, 6});
  SolverConfig cfg = long_cfg(InexactMode::Inject);
  cfg.max_iters = 500;
  cfg.epsilon = 1e-300;
  const SolveResult res = run(inst.problem, inst.start, cfg);
  EXPECT_EQ(res.status, Status::IterationLimit) << res.message;
  EXPECT_EQ(res.trace.size(), 500u);
  for (const TraceRecord& r : res.trace) {
    EXPECT_GE(r.min_ratio, 0.5 - 1e-12);
    EXPECT_LE(r.max_ratio, 2.0 + 1e-12);
  }
}

TEST(LongStep, PracticalModeTakesFewerIterations) {
  const auto inst = generate({8, 3, 1.0, 3, 1.0, 7});
  SolverConfig theory = long_cfg(InexactMode::Exact);
  theory.epsilon = 1e-6;
  SolverConfig practical = theory;
  practical.step_mode = StepMode::Practical;
  const SolveResult a = run(inst.problem, inst.start, theory);
  const SolveResult b = run(inst.problem, inst.start, practical);
  ASSERT_EQ(a.status, Status::Converged) << a.message;
  ASSERT_EQ(b.status, Status::Converged) << b.message;
  EXPECT_LT(b.iterations, a.iterations);
  for (const TraceRecord& r : b.trace) EXPECT_GE(r.alpha, 1.0 / 400.0);
}

TEST(LongStep, IterationBoundAtLooseTolerance) {
  const auto inst = generate({4, 2, 1.0, 1, 1.0, 8});
  SolverConfig cfg = long_cfg(InexactMode::Exact);
  cfg.epsilon = 1e-2;
  const SolveResult res = run(inst.problem, inst.start, cfg);
  ASSERT_EQ(res.status, Status::Converged) << res.message;
  EXPECT_LE(res.iterations, 9211);
}

TEST(Run, AlreadyConvergedStartTakesNoSteps) {
  const auto inst = generate({5, 2, 1.0, 1, 1e-7, 9});
  const SolveResult res = run(inst.problem, inst.start, short_cfg(InexactMode::Exact));
  EXPECT_EQ(res.status, Status::Converged);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_TRUE(res.trace.empty());
}

TEST(Run, StartOutsideNeighbourhoodIsRejected) {
  const auto inst = generate({6, 2, 1.0, 1, 1.0, 10});
  const Iterate wide = perturb_within(inst.start, {Hood::NS, 0.5}, 1.0, 1);
  const QpProblem p = with_consistent_c(inst.problem, wide);
  try {
    run(p, wide, short_cfg(InexactMode::Exact));
    FAIL() << "expected StartOutsideNeighbourhood";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StartOutsideNeighbourhood);
  }
}

TEST(Run, InfeasibleStartIsRejected) {
  const auto inst = generate({6, 2, 1.0, 1, 1.0, 11});
  const Iterate moved(1.1 * inst.start.x(), inst.start.y(), inst.start.s() / 1.1);
  EXPECT_THROW(run(inst.problem, moved, short_cfg(InexactMode::Exact)), Error);
}

TEST(Run, BoundaryStartIsAccepted) {
  const auto inst = generate({6, 2, 1.0, 2, 1.0, 12});
  const Iterate edge = perturb_within(inst.start, {Hood::N2, 0.1}, 1.0, 2);
  const QpProblem p = with_consistent_c(inst.problem, edge);
  SolverConfig cfg = short_cfg(InexactMode::Inject, 0.3, InjectShape::AdversarialSign);
  cfg.max_iters = 50;
  const SolveResult res = run(p, edge, cfg);
  EXPECT_EQ(res.status, Status::IterationLimit) << res.message;
}

TEST(Run, UncertifiedParametersTripTheAudit) {
  // theta = 0.01 is far outside the certified region: an injected residual
  // of size 0.3·||xi|| alone exceeds theta·mu.
  const auto inst = generate({4, 2, 1.0, 2, 1.0, 13});
  SolverConfig cfg = short_cfg(InexactMode::Inject, 0.3, InjectShape::RandomSphere);
  cfg.theta = 0.01;
  const SolveResult res = run(inst.problem, inst.start, cfg);
  EXPECT_EQ(res.status, Status::AuditViolation);
  EXPECT_FALSE(res.message.empty());
}

TEST(Run, NegativeEtaIsParamsInfeasible) {
  const auto inst = generate({4, 2, 1.0, 2, 1.0, 14});
  try {
    run(inst.problem, inst.start, short_cfg(InexactMode::Exact, 0.4));
    FAIL() << "expected ParamsInfeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParamsInfeasible);
  }
}

TEST(Run, SameSeedSameTrajectory) {
  const auto inst = generate({10, 4, 1.0, 3, 1.0, 15});
  SolverConfig cfg = short_cfg(InexactMode::Inject);
  cfg.epsilon = 1e-2;
  const SolveResult a = run(inst.problem, inst.start, cfg);
  const SolveResult b = run(inst.problem, inst.start, cfg);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) EXPECT_EQ(a.trace[k].mu, b.trace[k].mu);
  EXPECT_EQ(a.final.x(), b.final.x());
}

TEST(Run, InvalidConfigIsRejected) {
  const auto inst = generate({4, 2, 1.0, 0, 1.0, 16});
  SolverConfig cfg;
  cfg.epsilon = 0.0;
  EXPECT_THROW(run(inst.problem, inst.start, cfg), Error);
}
