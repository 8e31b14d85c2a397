#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "iipm/ipm_core.hpp"
#include "iipm/problem_gen.hpp"

namespace iipm {

struct CertEntry {
  double n = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs − lhs for short-step; alpha bound − alpha_hat for long-step
};

struct CertReport {
  bool passed = true;
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_n = 0.0;
  std::vector<CertEntry> entries;

  void add(const CertEntry& e) {
    entries.push_back(e);
    if (e.slack < worst_slack) {
      worst_slack = e.slack;
      worst_n = e.n;
    }
    passed = passed && e.slack >= 0.0;
  }
};

/// Sufficient condition for every step alpha ∈ (0, 1] of the short-step
/// method to stay in N₂(theta):
///
///   delta·rho·(1/theta + 1/√n) + (1 + delta)²·rho² / (theta(1 − theta))  ≤  1 − beta/√n,
///
/// with rho = √(theta² + beta²). At theta = beta this is
///   √2·delta·(1 + theta/√n) + 2(1 + delta)²·theta/(1 − theta) ≤ sigma.
/// n may be +infinity for the limit.
inline CertEntry shortstep_cert_entry(double theta, double beta, double delta, double n) {
  const double rho = std::sqrt(theta * theta + beta * beta);
  const double inv_rn = std::isinf(n) ? 0.0 : 1.0 / std::sqrt(n);
  CertEntry e;
  e.n = n;
  e.lhs = delta * rho * (1.0 / theta + inv_rn) + (1.0 + delta) * (1.0 + delta) * rho * rho / (theta * (1.0 - theta));
  e.rhs = 1.0 - beta * inv_rn;
  e.slack = e.rhs - e.lhs;
  return e;
}

inline CertReport certify_shortstep_params(double theta, double beta, double delta, const std::vector<double>& n_samples) {
  for (double v : {theta, beta, delta})
    if (!(v > 0.0 && v < 1.0)) throw Error(ErrorCode::InvalidArgument, "parameters must lie in (0, 1)");
  CertReport report;
  for (double n : n_samples) report.add(shortstep_cert_entry(theta, beta, delta, n));
  return report;
}

/// Checks alpha_hat = 1/(50n) against the three long-step step conditions.
/// Each entry's slack is min(a1, a2, a3) − alpha_hat.
inline CertReport certify_alpha_hat(double gamma, double sigma, double delta, const std::vector<long>& n_list) {
  for (double v : {gamma, sigma, delta})
    if (!(v > 0.0 && v < 1.0)) throw Error(ErrorCode::InvalidArgument, "parameters must lie in (0, 1)");
  CertReport report;
  for (long n : n_list) {
    const AlphaBounds b = compute_alpha_bounds(n, gamma, sigma, delta);
    CertEntry e;
    e.n = static_cast<double>(n);
    e.lhs = alpha_hat(n);
    e.rhs = std::min({b.a1, b.a2, b.a3});
    e.slack = e.rhs - e.lhs;
    report.add(e);
  }
  return report;
}

struct TightnessReport {
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  std::vector<double> ratios;  // measured / bound per iteration
  std::vector<double> dxds;
  SolveResult result;
};

/// Runs the solver and summarizes the distance-lemma ratio of each iteration
/// (short-step: ||ΔXΔSe||₂ against its N₂ bound; long-step: the larger of the
/// 1-norm and componentwise N_S bounds).
inline TightnessReport lemma_tightness_sweep(const QpProblem& p, const Iterate& start, SolverConfig cfg, long iters) {
  if (!cfg.audit) throw Error(ErrorCode::InvalidArgument, "lemma_tightness_sweep requires audit mode");
  cfg.max_iters = iters;
  TightnessReport out{0.0, 0.0, {}, {}, run(p, start, cfg)};
  for (const TraceRecord& r : out.result.trace) {
    out.ratios.push_back(r.lemma_ratio);
    out.dxds.push_back(r.dxds);
  }
  if (!out.ratios.empty()) {
    std::vector<double> sorted = out.ratios;
    std::sort(sorted.begin(), sorted.end());
    out.max_ratio = sorted.back();
    const std::size_t mid = sorted.size() / 2;
    out.median_ratio = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  }
  return out;
}

struct ScalingReport {
  std::vector<long> sizes;
  std::vector<double> iterations;  // mean over trials
  double fitted_exponent = 0.0;    // slope of log L against log n
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares fit of log L = a + p log n.
inline void fit_loglog(ScalingReport& rep) {
  const std::size_t k = rep.sizes.size();
  if (k < 3 || rep.iterations.size() != k)
    throw Error(ErrorCode::InvalidArgument, "need at least 3 sizes for a fit");
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    lx[i] = std::log(static_cast<double>(rep.sizes[i]));
    ly[i] = std::log(rep.iterations[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  rep.fitted_exponent = sxy / sxx;
  rep.intercept = my - rep.fitted_exponent * mx;
  rep.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
}

/// Instance recipe used by the scaling runs: m = n/2, about 16 nonzeros per
/// row of A once n > 16, rank(Q) = min(n/4, 8), mu0 = 1. A random Q of rank
/// n/4 makes the augmented factor essentially dense at n = 1024.
inline GenSpec scaling_instance(long n, std::uint64_t seed) {
  GenSpec g;
  g.n = n;
  g.m = std::max(1L, n / 2);
  g.density = std::min(1.0, 16.0 / static_cast<double>(n));
  g.q_rank = std::min(n / 4, 8L);
  g.mu0 = 1.0;
  g.seed = seed;
  return g;
}

/// Mean iteration count to reach mu ≤ eps for each size, and the fitted
/// exponent of L against n. Cells run in size order with seeds drawn from
/// one SplitMix64 stream, so a fixed seed reproduces the report exactly.
inline ScalingReport scaling_experiment(const SolverConfig& base, const std::vector<long>& sizes, double eps, int trials,
                                        std::uint64_t seed) {
  if (sizes.size() < 3) throw Error(ErrorCode::InvalidArgument, "need at least 3 sizes for a fit");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 2) throw Error(ErrorCode::InvalidArgument, "sizes must be ≥ 2");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw Error(ErrorCode::InvalidArgument, "sizes must be strictly increasing");
  }
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be ≥ 1");

  SolverConfig cfg = base;
  cfg.epsilon = eps;
  SplitMix64 seeds(seed);
  ScalingReport rep;
  for (long n : sizes) {
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
      const GeneratedInstance inst = generate(scaling_instance(n, seeds()));
      const SolveResult res = run(inst.problem, inst.start, cfg);
      if (res.status != Status::Converged)
        throw Error(ErrorCode::NumericalBreakdown,
                    "scaling run n = " + std::to_string(n) + " ended " + std::string(to_string(res.status)) + ": " +
                        res.message);
      total += static_cast<double>(res.iterations);
    }
    rep.sizes.push_back(n);
    rep.iterations.push_back(total / trials);
  }
  fit_loglog(rep);
  return rep;
}

}  // namespace iipm
