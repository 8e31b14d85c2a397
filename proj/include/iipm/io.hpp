#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iipm/analysis.hpp"
#include "iipm/ipm_core.hpp"
#include "iipm/qp_model.hpp"

namespace iipm::io {

namespace fs = std::filesystem;

/// Shortest decimal that reads back to the same double.
inline std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// --- Matrix Market -----------------------------------------------------------

inline SparseMatrix read_matrix_market(std::istream& in, const std::string& name = "<stream>") {
  const auto parse_error = [&](long line, const std::string& msg) {
    return Error(ErrorCode::ParseError, name + ":" + std::to_string(line) + ": " + msg);
  };

  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw parse_error(1, "empty file");
  ++lineno;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix") throw parse_error(lineno, "missing %%MatrixMarket matrix banner");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array") throw parse_error(lineno, "unsupported format '" + format + "'");
  if (field != "real" && field != "integer" && field != "double" && field != "pattern")
    throw parse_error(lineno, "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw parse_error(lineno, "unsupported symmetry '" + symmetry + "'");
  if (format == "array" && field == "pattern") throw parse_error(lineno, "pattern field requires coordinate format");
  const bool symmetric = symmetry == "symmetric";

  // Skip comments and blank lines up to the size line.
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] != '%' && line.find_first_not_of(" \t\r") != std::string::npos) break;
    line.clear();
  }
  if (line.empty()) throw parse_error(lineno, "missing size line");
  std::istringstream size_line(line);
  long rows = 0, cols = 0, nnz = 0;
  if (format == "coordinate") {
    if (!(size_line >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
      throw parse_error(lineno, "bad size line");
  } else {
    if (!(size_line >> rows >> cols) || rows < 0 || cols < 0) throw parse_error(lineno, "bad size line");
    nnz = symmetric ? cols * (cols + 1) / 2 : rows * cols;
  }
  if (symmetric && rows != cols) throw parse_error(lineno, "symmetric matrix must be square");

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  long read = 0;
  long arr_i = 0, arr_j = 0;  // array-format cursor (column-major)
  while (read < nnz && std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream entry(line);
    long i = 0, j = 0;
    double v = 1.0;
    if (format == "coordinate") {
      if (!(entry >> i >> j)) throw parse_error(lineno, "expected row and column indices");
      if (field != "pattern" && !(entry >> v)) throw parse_error(lineno, "expected a value");
      --i;
      --j;
      if (i < 0 || i >= rows || j < 0 || j >= cols) throw parse_error(lineno, "index out of range");
      if (symmetric && j > i) throw parse_error(lineno, "symmetric storage expects the lower triangle");
    } else {
      if (!(entry >> v)) throw parse_error(lineno, "expected a value");
      i = arr_i;
      j = arr_j;
      if (++arr_i == rows) {
        ++arr_j;
        arr_i = symmetric ? arr_j : 0;
      }
    }
    std::string extra;
    if (entry >> extra) throw parse_error(lineno, "trailing tokens");
    trips.emplace_back(i, j, v);
    if (symmetric && i != j) trips.emplace_back(j, i, v);
    ++read;
  }
  if (read < nnz)
    throw parse_error(lineno, "expected " + std::to_string(nnz) + " entries, found " + std::to_string(read));

  SparseMatrix out(rows, cols);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

inline SparseMatrix read_matrix_market(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return read_matrix_market(in, path.string());
}

/// Coordinate format with 17 significant digits. With `symmetric` only the
/// lower triangle is written.
inline void write_matrix_market(std::ostream& out, const SparseMatrix& M, bool symmetric) {
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index k = 0; k < M.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(M, k); it; ++it)
      if (!symmetric || it.row() >= it.col()) entries.emplace_back(it.row(), it.col(), it.value());
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << "\n";
  out << M.rows() << " " << M.cols() << " " << entries.size() << "\n";
  char buf[64];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%.17g", e.value());
    out << e.row() + 1 << " " << e.col() + 1 << " " << buf << "\n";
  }
}

inline void write_matrix_market(const fs::path& path, const SparseMatrix& M, bool symmetric) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_matrix_market(out, M, symmetric);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

// --- Instance manifest -------------------------------------------------------

/// JSON manifest:
///   { "n": 4, "m": 2, "A": "A.mtx", "Q": "Q.mtx", "b": [...], "c": [...],
///     "start": { "x": [...], "y": [...], "s": [...] }, "mu0": 1.0 }
/// Matrix paths are relative to the manifest's directory; "start" and "mu0"
/// are optional.
struct LoadedInstance {
  QpProblem problem;
  std::optional<Iterate> start;
  std::optional<double> mu0;
};

inline Vector json_vector(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array()) throw Error(ErrorCode::ParseError, "manifest field '" + key + "' must be an array");
  const auto values = j[key].get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline LoadedInstance load_instance(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::MissingFile, manifest_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, manifest_path.string() + ": " + e.what());
  }

  LoadedInstance out;
  try {
    const fs::path dir = manifest_path.parent_path();
    for (const char* key : {"A", "Q", "n", "m"})
      if (!j.contains(key)) throw Error(ErrorCode::ParseError, std::string("manifest lacks '") + key + "'");
    const long n = j["n"].get<long>();
    const long m = j["m"].get<long>();
    out.problem.A = read_matrix_market(dir / j["A"].get<std::string>());
    out.problem.Q = read_matrix_market(dir / j["Q"].get<std::string>());
    out.problem.b = json_vector(j, "b");
    out.problem.c = json_vector(j, "c");
    if (out.problem.n() != n || out.problem.m() != m)
      throw Error(ErrorCode::ValidationFailed,
                  Error(ErrorCode::DimensionMismatch, "manifest declares " + std::to_string(m) + "x" + std::to_string(n) +
                                                          " but A is " + std::to_string(out.problem.m()) + "x" +
                                                          std::to_string(out.problem.n())));
    if (j.contains("mu0")) out.mu0 = j["mu0"].get<double>();
    if (j.contains("start")) {
      const auto& st = j["start"];
      try {
        out.start.emplace(json_vector(st, "x"), json_vector(st, "y"), json_vector(st, "s"));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw;
        throw Error(ErrorCode::ValidationFailed, e);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, manifest_path.string() + ": " + e.what());
  }

  const ValidationReport report = validate(out.problem);
  if (!report.valid) throw Error(ErrorCode::ValidationFailed, Error(*report.error, report.message));
  return out;
}

/// Writes <dir>/<stem>.json plus <stem>_A.mtx and <stem>_Q.mtx. Returns the
/// manifest path.
inline fs::path save_instance(const fs::path& dir, const std::string& stem, const QpProblem& p,
                              const std::optional<Iterate>& start = std::nullopt) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const std::string a_name = stem + "_A.mtx", q_name = stem + "_Q.mtx";
  write_matrix_market(dir / a_name, p.A, false);
  const bool q_symmetric = SparseMatrix(p.Q - SparseMatrix(p.Q.transpose())).norm() == 0.0;
  write_matrix_market(dir / q_name, p.Q, q_symmetric);

  const auto to_json = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j;
  j["n"] = p.n();
  j["m"] = p.m();
  j["A"] = a_name;
  j["Q"] = q_name;
  j["b"] = to_json(p.b);
  j["c"] = to_json(p.c);
  if (start) {
    j["start"] = {{"x", to_json(start->x())}, {"y", to_json(start->y())}, {"s", to_json(start->s())}};
    j["mu0"] = start->mu();
  }
  const fs::path manifest = dir / (stem + ".json");
  std::ofstream out(manifest);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + manifest.string());
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + manifest.string());
  return manifest;
}

// --- CSV ---------------------------------------------------------------------

inline constexpr const char* kTraceHeader =
    "iter,mu,sigma,alpha,r_ratio,prox2,min_ratio,max_ratio,primal_res,dual_res,dxds,lemma_slack";

inline void write_trace(std::ostream& out, const SolveResult& result) {
  out << kTraceHeader << "\n";
  for (const TraceRecord& r : result.trace) {
    out << r.iter;
    for (double v : {r.mu, r.sigma, r.alpha, r.r_ratio, r.prox2, r.min_ratio, r.max_ratio, r.primal_res, r.dual_res,
                     r.dxds, r.lemma_slack})
      out << "," << shortest(v);
    out << "\n";
  }
}

inline void save_trace(const SolveResult& result, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_trace(out, result);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

inline void write_scaling(std::ostream& out, const ScalingReport& rep) {
  out << "n,iterations\n";
  for (std::size_t i = 0; i < rep.sizes.size(); ++i) out << rep.sizes[i] << "," << shortest(rep.iterations[i]) << "\n";
  out << "# exponent," << shortest(rep.fitted_exponent) << "\n";
  out << "# r_squared," << shortest(rep.r_squared) << "\n";
}

inline void write_cert(std::ostream& out, const CertReport& rep) {
  out << "n,lhs,rhs,slack\n";
  for (const CertEntry& e : rep.entries)
    out << shortest(e.n) << "," << shortest(e.lhs) << "," << shortest(e.rhs) << "," << shortest(e.slack) << "\n";
}

}  // namespace iipm::io
