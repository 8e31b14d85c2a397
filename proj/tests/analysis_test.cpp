#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "test_support.hpp"

using namespace iipm;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

// Same formulas evaluated in 50 significant digits.
Big big_shortstep_slack(Big theta, Big beta, Big delta, Big n) {
  using boost::multiprecision::sqrt;
  const Big rho = sqrt(theta * theta + beta * beta);
  const Big lhs = delta * rho * (1 / theta + 1 / sqrt(n)) + (1 + delta) * (1 + delta) * rho * rho / (theta * (1 - theta));
  return (1 - beta / sqrt(n)) - lhs;
}

Big big_alpha_slack(Big gamma, Big sigma, Big delta, Big n) {
  const Big spread = 1 / gamma - sigma;
  const Big K = (1 + delta) * (1 + delta) / gamma * spread * spread;
  const Big a1 = (sigma * (1 - gamma) - delta * (1 + gamma) * spread) / ((gamma + n) * K);
  const Big a2 = ((1 / gamma - 1) * sigma - delta * (1 + 1 / gamma) * spread) / K;
  const Big a3 = (Big("0.9") - sigma - delta * spread) / K;
  Big lo = a1;
  if (a2 < lo) lo = a2;
  if (a3 < lo) lo = a3;
  return lo - 1 / (50 * n);
}

}  // namespace

TEST(ShortStepCert, DefaultsAtTwo) {
  const CertEntry e = shortstep_cert_entry(0.1, 0.1, 0.3, 2.0);
  // 0.4543 + 0.3756 with each term rounded to four places; exact value 0.82982.
  EXPECT_NEAR(e.lhs, 0.8299, 1e-4);
  EXPECT_NEAR(e.rhs, 0.9293, 5e-5);
  EXPECT_GT(e.slack, 0.0);
}

TEST(ShortStepCert, LimitAtInfinity) {
  const CertEntry e = shortstep_cert_entry(0.1, 0.1, 0.3, std::numeric_limits<double>::infinity());
  EXPECT_NEAR(e.lhs, 0.7998, 5e-5);
  EXPECT_EQ(e.rhs, 1.0);
}

TEST(ShortStepCert, SymmetricFormReducesToClosedExpression) {
  // At theta = beta: √2·delta·(1 + theta/√n) + 2(1 + delta)²·theta/(1 − theta).
  for (double n : {2.0, 7.0, 100.0}) {
    const double th = 0.1, d = 0.3;
    const double closed = std::sqrt(2.0) * d * (1.0 + th / std::sqrt(n)) + 2.0 * (1 + d) * (1 + d) * th / (1 - th);
    EXPECT_NEAR(shortstep_cert_entry(th, th, d, n).lhs, closed, 1e-15);
  }
}

TEST(ShortStepCert, FullSweepPasses) {
  std::vector<double> ns;
  for (double n = 2; n <= 1e6; n *= 1.5) ns.push_back(std::floor(n));
  ns.push_back(std::numeric_limits<double>::infinity());
  const CertReport r = certify_shortstep_params(0.1, 0.1, 0.3, ns);
  EXPECT_TRUE(r.passed);
  EXPECT_GT(r.worst_slack, 0.09);
  EXPECT_EQ(r.worst_n, 2.0);
}

TEST(ShortStepCert, LargeDeltaFails) {
  const CertReport r = certify_shortstep_params(0.1, 0.1, 0.5, {2.0, 10.0});
  EXPECT_FALSE(r.passed);
  EXPECT_LT(r.worst_slack, 0.0);
}

TEST(ShortStepCert, MatchesFiftyDigitOracle) {
  SplitMix64 rng(2024);
  for (int k = 0; k < 200; ++k) {
    const double th = rng.uniform(0.01, 0.5), be = rng.uniform(0.01, 0.5), de = rng.uniform(0.0, 0.5);
    const double n = std::floor(rng.uniform(2.0, 1e6));
    const double got = shortstep_cert_entry(th, be, de, n).slack;
    const double want = big_shortstep_slack(Big(th), Big(be), Big(de), Big(n)).convert_to<double>();
    EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST(AlphaHatCert, DefaultsPass) {
  const CertReport r = certify_alpha_hat(0.5, 0.5, 0.05, {2, 10, 100, 1000000});
  EXPECT_TRUE(r.passed);
  ASSERT_EQ(r.entries.size(), 4u);
  EXPECT_NEAR(r.entries[0].slack, 0.0110859158478206 - 0.01, 1e-15);
  EXPECT_NEAR(r.entries[0].slack, 0.001086, 1e-6);
  for (const CertEntry& e : r.entries) EXPECT_GT(e.slack, 0.0);
}

TEST(AlphaHatCert, LargerDeltaFails) {
  const CertReport r = certify_alpha_hat(0.5, 0.5, 0.2, {2, 10});
  EXPECT_FALSE(r.passed);
}

TEST(AlphaHatCert, MatchesFiftyDigitOracle) {
  SplitMix64 rng(7);
  for (int k = 0; k < 200; ++k) {
    const double g = rng.uniform(0.1, 0.9), s = rng.uniform(0.1, 0.9), d = rng.uniform(0.0, 0.2);
    const long n = 2 + static_cast<long>(rng.below(1000000));
    const double got = certify_alpha_hat(g, s, std::max(d, 1e-6), {n}).worst_slack;
    const double want = big_alpha_slack(Big(g), Big(s), Big(std::max(d, 1e-6)), Big(n)).convert_to<double>();
    EXPECT_NEAR(got, want, 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST(AlphaHatCert, RejectsParametersOutsideUnitInterval) {
  EXPECT_THROW(certify_alpha_hat(1.0, 0.5, 0.05, {2}), Error);
  EXPECT_THROW(certify_shortstep_params(0.1, 0.0, 0.3, {2}), Error);
}

TEST(Tightness, InjectedShortStepStaysBelowBound) {
  const auto inst = generate({16, 6, 1.0, 4, 1.0, 3});
  SolverConfig cfg = SolverConfig::short_step();
  cfg.inexact.mode = InexactMode::Inject;
  cfg.inexact.inject_shape = InjectShape::AdversarialSign;
  cfg.epsilon = 1e-300;
  const TightnessReport inj = lemma_tightness_sweep(inst.problem, inst.start, cfg, 200);
  EXPECT_EQ(inj.ratios.size(), 200u);
  EXPECT_LE(inj.max_ratio, 1.0);
  EXPECT_GT(inj.max_ratio, 0.0);
}

TEST(Tightness, ExactRatiosBelowRandomInjection) {
  // Sign-adversarial injection near the centre shrinks |xi + r| and hence the
  // step, so the comparison uses randomly oriented residuals.
  const auto inst = generate({16, 6, 1.0, 4, 1.0, 3});
  SolverConfig cfg = SolverConfig::short_step();
  cfg.epsilon = 1e-300;
  cfg.inexact.mode = InexactMode::Inject;
  cfg.inexact.inject_shape = InjectShape::RandomSphere;
  const TightnessReport inj = lemma_tightness_sweep(inst.problem, inst.start, cfg, 200);
  cfg.inexact.mode = InexactMode::Exact;
  const TightnessReport exact = lemma_tightness_sweep(inst.problem, inst.start, cfg, 200);
  EXPECT_LE(inj.max_ratio, 1.0);
  EXPECT_LT(exact.median_ratio, inj.median_ratio);
  EXPECT_LT(exact.max_ratio, inj.max_ratio);
}

TEST(Tightness, LpCentralStartHasOrthogonalSteps) {
  const auto inst = generate({10, 4, 1.0, 0, 1.0, 4});
  SolverConfig cfg = SolverConfig::short_step();
  cfg.epsilon = 1e-300;
  const TightnessReport rep = lemma_tightness_sweep(inst.problem, inst.start, cfg, 100);
  for (double v : rep.dxds) EXPECT_LE(std::abs(v), 1e-12);
}

TEST(Tightness, RequiresAudit) {
  const auto inst = generate({4, 2, 1.0, 0, 1.0, 1});
  SolverConfig cfg;
  cfg.audit = false;
  EXPECT_THROW(lemma_tightness_sweep(inst.problem, inst.start, cfg, 5), Error);
}

TEST(Scaling, FitRecoversKnownExponent) {
  ScalingReport rep;
  rep.sizes = {4, 16, 64, 256};
  for (long n : rep.sizes) rep.iterations.push_back(3.0 * std::pow(static_cast<double>(n), 0.5));
  fit_loglog(rep);
  EXPECT_NEAR(rep.fitted_exponent, 0.5, 1e-12);
  EXPECT_NEAR(std::exp(rep.intercept), 3.0, 1e-12);
  EXPECT_NEAR(rep.r_squared, 1.0, 1e-12);
}

TEST(Scaling, NeedsThreeSizes) {
  EXPECT_THROW(scaling_experiment(SolverConfig::short_step(), {16, 64}, 1e-2, 1, 0), Error);
  EXPECT_THROW(scaling_experiment(SolverConfig::short_step(), {16, 8, 64}, 1e-2, 1, 0), Error);
}

TEST(Scaling, SmallShortStepRunIsReproducible) {
  const std::vector<long> sizes{4, 8, 16};
  const ScalingReport a = scaling_experiment(SolverConfig::short_step(), sizes, 1e-2, 2, 5);
  const ScalingReport b = scaling_experiment(SolverConfig::short_step(), sizes, 1e-2, 2, 5);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.fitted_exponent, b.fitted_exponent);
  EXPECT_GT(a.fitted_exponent, 0.3);
  EXPECT_LT(a.fitted_exponent, 0.7);
}
