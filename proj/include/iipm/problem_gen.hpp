#pragma once

#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "iipm/neighborhood.hpp"
#include "iipm/qp_model.hpp"

namespace iipm {

/// Recipe for a random feasible instance with an exactly central start.
struct GenSpec {
  long n = 10;
  long m = 5;
  double density = 1.0;  // fill probability of A and of the Q factor G
  long q_rank = 0;       // rank of Q = GᵀG; 0 gives an LP
  double mu0 = 1.0;
  std::uint64_t seed = 0;
};

struct GeneratedInstance {
  QpProblem problem;
  Iterate start;
};

namespace detail {

inline SparseMatrix random_sparse(long rows, long cols, double density, SplitMix64& rng) {
  std::vector<Eigen::Triplet<double>> trips;
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i)
      if (density >= 1.0 || rng.uniform() < density) trips.emplace_back(i, j, rng.normal());
  SparseMatrix out(rows, cols);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

inline long numerical_rank(const SparseMatrix& A) {
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(DenseMatrix(A.transpose()));
  qr.setThreshold(1e-10);
  return qr.rank();
}

}  // namespace detail

/// Builds A (full row rank, resampled up to 10 times), Q = GᵀG with
/// rank(G) = q_rank, a start with x⁰_j ∈ [0.5, 2] and s⁰_j = mu0 / x⁰_j, and
/// b, c chosen so that the start is primal and dual feasible.
inline GeneratedInstance generate(const GenSpec& spec) {
  if (spec.n < 2 || spec.m < 1 || spec.m > spec.n)
    throw Error(ErrorCode::InvalidArgument, "need n ≥ 2 and 1 ≤ m ≤ n");
  if (!(spec.density > 0.0 && spec.density <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "density must lie in (0, 1]");
  if (spec.q_rank < 0 || spec.q_rank > spec.n) throw Error(ErrorCode::InvalidArgument, "q_rank must lie in [0, n]");
  if (!(spec.mu0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "mu0 must be positive");

  SplitMix64 rng(spec.seed);
  QpProblem p;
  bool full_rank = false;
  for (int attempt = 0; attempt < 10 && !full_rank; ++attempt) {
    p.A = detail::random_sparse(spec.m, spec.n, spec.density, rng);
    full_rank = detail::numerical_rank(p.A) == spec.m;
  }
  if (!full_rank)
    throw Error(ErrorCode::RankResampleExhausted, "no full-row-rank A after 10 draws; density too low?");

  p.Q = SparseMatrix(spec.n, spec.n);
  if (spec.q_rank > 0) {
    bool rank_ok = false;
    for (int attempt = 0; attempt < 10 && !rank_ok; ++attempt) {
      const SparseMatrix G = detail::random_sparse(spec.q_rank, spec.n, spec.density, rng);
      if (detail::numerical_rank(G) != spec.q_rank) continue;
      const SparseMatrix gtg = SparseMatrix(G.transpose()) * G;
      // Averaging with the transpose makes Q bitwise symmetric.
      p.Q = 0.5 * (gtg + SparseMatrix(gtg.transpose()));
      rank_ok = true;
    }
    if (!rank_ok) throw Error(ErrorCode::RankResampleExhausted, "no factor G of the requested rank after 10 draws");
  }
  p.Q.prune(0.0);

  Vector x(spec.n), s(spec.n), y(spec.m);
  for (long j = 0; j < spec.n; ++j) x[j] = rng.uniform(0.5, 2.0);
  for (long j = 0; j < spec.n; ++j) s[j] = spec.mu0 / x[j];
  for (long i = 0; i < spec.m; ++i) y[i] = rng.normal();

  p.b = p.A * x;
  p.c = p.A.transpose() * y + s - p.Q * x;
  Iterate start(std::move(x), std::move(y), std::move(s));
  return {std::move(p), std::move(start)};
}

enum class Hood { N2, NS };

struct HoodTarget {
  Hood kind = Hood::N2;
  double param = 0.1;  // theta for N2, gamma for NS
};

/// Moves an exactly central iterate to fraction `margin` of the way to the
/// neighbourhood boundary while keeping mu. Only s changes; rebuild the
/// instance with with_consistent_c() before solving from the result.
///
/// N2: XSe = mu(e + margin·theta·u) with eᵀu = 0, ||u|| = 1.
/// NS: one product at (1 − margin(1 − gamma)) mu, one as close to
///     (1 + margin(1/gamma − 1)) mu as the mean allows, the rest equal.
inline Iterate perturb_within(const Iterate& it, HoodTarget target, double margin, std::uint64_t seed) {
  if (!(margin >= 0.0 && margin <= 1.0))
    throw Error(ErrorCode::MarginOutOfRange, "margin must lie in [0, 1]");
  if (!(target.param > 0.0 && target.param < 1.0))
    throw Error(ErrorCode::InvalidArgument, "neighbourhood parameter must lie in (0, 1)");
  if (margin == 0.0) return it;

  const long n = it.n();
  const double mu = it.mu();
  SplitMix64 rng(seed);

  // Unit deviation direction; the ratios are then 1 + m·dev for margin m.
  Vector dev(n);
  long low_idx = 0, top_idx = 1;
  if (target.kind == Hood::N2) {
    for (long j = 0; j < n; ++j) dev[j] = rng.normal();
    dev.array() -= dev.mean();
    dev *= target.param / dev.norm();
  } else {
    const double gamma = target.param;
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0L);
    for (long j = n - 1; j > 0; --j) std::swap(order[j], order[rng.below(j + 1)]);
    dev.setZero();
    low_idx = order[0];
    top_idx = order[1];
    dev[low_idx] = -(1.0 - gamma);
  }

  const auto build = [&](double m) {
    Vector ratios = (1.0 + m * dev.array()).matrix();
    if (target.kind == Hood::NS) {
      const double gamma = target.param;
      const double low = ratios[low_idx];
      const double high = 1.0 + m * (1.0 / gamma - 1.0);
      // The other n − 1 ratios must average (n − low)/(n − 1) and stay ≥ low.
      const double top = n == 2 ? 2.0 - low
                                : std::min(high, static_cast<double>(n) - static_cast<double>(n - 1) * low);
      const double fill = n == 2 ? top : (static_cast<double>(n) - low - top) / static_cast<double>(n - 2);
      for (long j = 0; j < n; ++j)
        if (j != low_idx) ratios[j] = fill;
      ratios[top_idx] = top;
    }
    return Iterate(it.x(), it.y(), (mu * ratios.array() / it.x().array()).matrix());
  };
  const auto inside = [&](const Iterate& cand) {
    const ProximityReport prox = proximity(cand);
    return target.kind == Hood::N2 ? in_n2(prox, target.param) : in_ns(prox, target.param);
  };

  // At margin 1 rounding can put the point a few ulps outside the closed
  // neighbourhood; pull it back by the smallest relative amount that works.
  double m = margin;
  Iterate out = build(m);
  for (double shrink = 1e-15; !inside(out) && shrink < 1e-9; shrink *= 4.0) {
    m = margin * (1.0 - shrink);
    out = build(m);
  }
  return out;
}

}  // namespace iipm
