#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace iipm {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;  // column-major (CSC)

/// Failure categories surfaced by the library. Each one aborts the current
/// operation; `SolveResult::status` covers the outcomes of a completed run.
enum class ErrorCode {
  DimensionMismatch,
  RankDeficient,
  NotSymmetric,
  NotPSD,
  TooSmall,
  NotInterior,
  SingularSystem,
  MaxInnerIterations,
  ParamsInfeasible,
  StartOutsideNeighbourhood,
  StepsizeUnderflow,
  AuditViolation,
  NumericalBreakdown,
  RankResampleExhausted,
  MarginOutOfRange,
  InvalidArgument,
  ParseError,
  ValidationFailed,
  MissingFile,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::NotInterior: return "NotInterior";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::MaxInnerIterations: return "MaxInnerIterations";
    case ErrorCode::ParamsInfeasible: return "ParamsInfeasible";
    case ErrorCode::StartOutsideNeighbourhood: return "StartOutsideNeighbourhood";
    case ErrorCode::StepsizeUnderflow: return "StepsizeUnderflow";
    case ErrorCode::AuditViolation: return "AuditViolation";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::RankResampleExhausted: return "RankResampleExhausted";
    case ErrorCode::MarginOutOfRange: return "MarginOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  /// Wraps another error, keeping the inner code visible as `cause()`.
  Error(ErrorCode code, const Error& inner)
      : std::runtime_error(std::string(to_string(code)) + "(" + inner.what() +
                           ")"),
        code_(code),
        cause_(inner.code()) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCode cause() const noexcept { return cause_; }

 private:
  ErrorCode code_;
  ErrorCode cause_ = code_;
};

/// p-norm selector for the residual contract ||r||_p <= delta ||xi||_p.
enum class Norm { Two, Inf };

inline double norm(const Vector& v, Norm p) {
  if (v.size() == 0) return 0.0;
  return p == Norm::Two ? v.norm() : v.lpNorm<Eigen::Infinity>();
}

constexpr std::string_view to_string(Norm p) {
  return p == Norm::Two ? "2" : "inf";
}

/// SplitMix64 (Steele, Lea & Flood). Every random draw in the library flows
/// from one of these, seeded from the user-facing `--seed`.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; no cached second variate so the stream
  /// position depends only on the number of calls.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t below(std::uint64_t bound) { return (*this)() % bound; }

 private:
  std::uint64_t state_;
};

}  // namespace iipm
