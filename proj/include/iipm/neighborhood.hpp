#pragma once

#include "iipm/qp_model.hpp"

namespace iipm {

/// Proximity of an iterate to the central path, all measured against the
/// same mu = xᵀs / n.
struct ProximityReport {
  double norm2_dev = 0.0;  // ||XSe − mu e||₂
  double min_ratio = 1.0;  // min_j x_j s_j / mu
  double max_ratio = 1.0;  // max_j x_j s_j / mu
  double mu = 0.0;
};

inline ProximityReport proximity(const Iterate& it) {
  const Vector xs = it.products();
  const double mu = it.mu();
  ProximityReport r;
  r.mu = mu;
  r.norm2_dev = (xs.array() - mu).matrix().norm();
  r.min_ratio = xs.minCoeff() / mu;
  r.max_ratio = xs.maxCoeff() / mu;
  return r;
}

/// ||XSe − mu e||₂ ≤ theta·mu. Closed set: the boundary is a member.
inline bool in_n2(const ProximityReport& r, double theta, double slack = 0.0) {
  return r.norm2_dev <= theta * r.mu + slack;
}

inline bool in_n2(const Iterate& it, double theta) { return in_n2(proximity(it), theta); }

/// gamma·mu ≤ x_j s_j ≤ mu/gamma for every j.
inline bool in_ns(const ProximityReport& r, double gamma, double slack = 0.0) {
  return r.min_ratio * r.mu >= gamma * r.mu - slack && r.max_ratio * r.mu <= r.mu / gamma + slack;
}

inline bool in_ns(const Iterate& it, double gamma) { return in_ns(proximity(it), gamma); }

/// Membership with 1e-12 absolute slack, for telling roundoff at the boundary
/// apart from genuine exits in diagnostics.
inline bool in_n2_relaxed(const Iterate& it, double theta) { return in_n2(proximity(it), theta, 1e-12); }
inline bool in_ns_relaxed(const Iterate& it, double gamma) { return in_ns(proximity(it), gamma, 1e-12); }

}  // namespace iipm
