// iipm: command-line front end for the inexact feasible interior point solver.
//
//   iipm solve   --generate n,m,density,qrank,mu0 --seed 7 --variant long --audit
//   iipm solve   --manifest inst.json --variant short --inexact iterative
//   iipm certify
//   iipm scale   --variant short --sizes 16,64,256 --epsilon 1e-3
//   iipm gen     --generate 20,10,1.0,5,1.0 --seed 3 --out instances/
//
// Exit codes: 0 success, 1 certification failed, 2 audit violation,
// 3 validation/parse error, 4 iteration limit, 5 numerical breakdown,
// 64 usage error.

#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "iipm/iipm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCertFailed = 1;
constexpr int kExitAudit = 2;
constexpr int kExitInvalid = 3;
constexpr int kExitIterLimit = 4;
constexpr int kExitBreakdown = 5;
constexpr int kExitUsage = 64;

std::shared_ptr<spdlog::logger> make_logger() {
  auto log = spdlog::stderr_color_mt("iipm");
  log->set_pattern("[%l] %v");
  const char* env = std::getenv("IPM_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug")
    log->set_level(spdlog::level::debug);
  else if (level == "info")
    log->set_level(spdlog::level::info);
  else
    log->set_level(spdlog::level::err);
  return log;
}

iipm::GenSpec parse_generate(const std::string& text, std::uint64_t seed) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 5) throw CLI::ValidationError("--generate", "expected n,m,density,qrank,mu0");
  iipm::GenSpec g;
  try {
    g.n = std::stol(parts[0]);
    g.m = std::stol(parts[1]);
    g.density = std::stod(parts[2]);
    g.q_rank = std::stol(parts[3]);
    g.mu0 = std::stod(parts[4]);
  } catch (const std::exception&) {
    throw CLI::ValidationError("--generate", "expected n,m,density,qrank,mu0");
  }
  g.seed = seed;
  return g;
}

int status_exit(iipm::Status s) {
  switch (s) {
    case iipm::Status::Converged: return kExitOk;
    case iipm::Status::AuditViolation: return kExitAudit;
    case iipm::Status::IterationLimit: return kExitIterLimit;
    case iipm::Status::NumericalBreakdown: return kExitBreakdown;
  }
  return kExitBreakdown;
}

struct SolveArgs {
  std::string variant = "short";
  std::optional<double> delta;
  std::optional<double> theta;
  std::optional<double> gamma;
  double epsilon = 1e-6;
  std::string inexact = "exact";
  std::string inject_shape = "sphere";
  double inject_fraction = 1.0;
  std::string step_mode = "theory";
  bool audit = false;
  long max_iters = 0;
  std::string trace;
  std::string manifest;
  std::string generate;
  std::uint64_t seed = 0;
};

int run_solve(const SolveArgs& a, spdlog::logger& log) {
  iipm::SolverConfig cfg = a.variant == "long" ? iipm::SolverConfig::long_step() : iipm::SolverConfig::short_step();
  if (a.delta) cfg.delta = *a.delta;
  if (a.theta) cfg.theta = *a.theta;
  if (a.gamma) cfg.gamma = *a.gamma;
  cfg.epsilon = a.epsilon;
  cfg.audit = a.audit;
  cfg.max_iters = a.max_iters;
  cfg.step_mode = a.step_mode == "practical" ? iipm::StepMode::Practical : iipm::StepMode::TheoryFixed;
  static const std::map<std::string, iipm::InexactMode> modes{
      {"exact", iipm::InexactMode::Exact}, {"inject", iipm::InexactMode::Inject}, {"iterative", iipm::InexactMode::Iterative}};
  static const std::map<std::string, iipm::InjectShape> shapes{{"sphere", iipm::InjectShape::RandomSphere},
                                                               {"sign", iipm::InjectShape::AdversarialSign},
                                                               {"aligned", iipm::InjectShape::AlignedWithXi}};
  cfg.inexact.mode = modes.at(a.inexact);
  cfg.inexact.inject_shape = shapes.at(a.inject_shape);
  cfg.inexact.inject_fraction = a.inject_fraction;
  cfg.inexact.seed = a.seed;

  std::optional<iipm::QpProblem> problem;
  std::optional<iipm::Iterate> start;
  if (!a.manifest.empty()) {
    auto loaded = iipm::io::load_instance(a.manifest);
    if (!loaded.start) throw iipm::Error(iipm::ErrorCode::ValidationFailed, "manifest has no starting point");
    problem = std::move(loaded.problem);
    start = std::move(loaded.start);
  } else {
    auto inst = iipm::generate(parse_generate(a.generate, a.seed));
    problem = std::move(inst.problem);
    start = std::move(inst.start);
  }
  log.info("n = {}, m = {}, variant = {}, delta = {}", problem->n(), problem->m(), a.variant, cfg.delta);

  const iipm::SolveResult res = iipm::run(*problem, *start, cfg);
  for (const auto& r : res.trace)
    log.debug("iter {} mu {:.6e} alpha {:.3e} r_ratio {:.3e} prox2 {:.3e}", r.iter, r.mu, r.alpha, r.r_ratio, r.prox2);
  if (!a.trace.empty()) iipm::io::save_trace(res, a.trace);

  const auto obj = iipm::objective_pair(*problem, res.final);
  std::cout << "status      " << iipm::to_string(res.status) << "\n"
            << "iterations  " << res.iterations << "\n"
            << "mu          " << iipm::io::shortest(res.final.mu()) << "\n"
            << "primal_obj  " << iipm::io::shortest(obj.primal) << "\n"
            << "dual_obj    " << iipm::io::shortest(obj.dual) << "\n";
  if (!res.message.empty()) log.error("{}", res.message);
  return status_exit(res.status);
}

struct CertArgs {
  double theta = 0.1, beta = 0.1, delta_short = 0.3;
  double gamma = 0.5, sigma = 0.5, delta_long = 0.05;
  std::string csv;
};

int run_certify(const CertArgs& a) {
  const std::vector<double> short_ns{2, 3, 4, 5, 10, 100, 1e3, 1e4, 1e5, 1e6, std::numeric_limits<double>::infinity()};
  const std::vector<long> long_ns{2, 3, 5, 10, 100, 1000, 1000000};
  const auto sc = iipm::certify_shortstep_params(a.theta, a.beta, a.delta_short, short_ns);
  const auto lc = iipm::certify_alpha_hat(a.gamma, a.sigma, a.delta_long, long_ns);
  const double K = iipm::longstep_constant(a.gamma, a.sigma, a.delta_long);

  std::cout << "short-step (theta=" << a.theta << ", beta=" << a.beta << ", delta=" << a.delta_short << "): "
            << (sc.passed ? "PASS" : "FAIL") << ", worst slack " << iipm::io::shortest(sc.worst_slack) << " at n = "
            << sc.worst_n << "\n";
  std::cout << "eta = beta(1 - 2 delta - 0.38) = " << iipm::io::shortest(iipm::shortstep_eta(a.beta, a.delta_short))
            << "\n";
  std::cout << "long-step constant (1+delta)^2/gamma (1/gamma - sigma)^2 = " << iipm::io::shortest(K) << "\n";
  std::cout << "alpha_hat = 1/(50n) (gamma=" << a.gamma << ", sigma=" << a.sigma << ", delta=" << a.delta_long
            << "): " << (lc.passed ? "PASS" : "FAIL") << ", worst slack " << iipm::io::shortest(lc.worst_slack)
            << " at n = " << lc.worst_n << "\n";
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    out << "# short-step\n";
    iipm::io::write_cert(out, sc);
    out << "# alpha-hat\n";
    iipm::io::write_cert(out, lc);
    if (!out) throw iipm::Error(iipm::ErrorCode::IoError, "cannot write " + a.csv);
  }
  return sc.passed && lc.passed ? kExitOk : kExitCertFailed;
}

struct ScaleArgs {
  std::string variant = "short";
  std::vector<long> sizes;
  double epsilon = 0.0;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string step_mode = "theory";
  std::string csv;
};

int run_scale(ScaleArgs a) {
  iipm::SolverConfig cfg = a.variant == "long" ? iipm::SolverConfig::long_step() : iipm::SolverConfig::short_step();
  cfg.step_mode = a.step_mode == "practical" ? iipm::StepMode::Practical : iipm::StepMode::TheoryFixed;
  if (a.sizes.empty()) a.sizes = a.variant == "long" ? std::vector<long>{2, 4, 8} : std::vector<long>{16, 64, 256, 1024};
  if (a.epsilon <= 0.0) a.epsilon = a.variant == "long" ? 1e-1 : 1e-3;
  const auto rep = iipm::scaling_experiment(cfg, a.sizes, a.epsilon, a.trials, a.seed);
  iipm::io::write_scaling(std::cout, rep);
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    iipm::io::write_scaling(out, rep);
    if (!out) throw iipm::Error(iipm::ErrorCode::IoError, "cannot write " + a.csv);
  }
  return kExitOk;
}

struct GenArgs {
  std::string generate;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string stem = "instance";
};

int run_gen(const GenArgs& a) {
  const auto inst = iipm::generate(parse_generate(a.generate, a.seed));
  const auto path = iipm::io::save_instance(a.out, a.stem, inst.problem, inst.start);
  std::cout << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  auto log = make_logger();
  CLI::App app{"Inexact feasible primal-dual interior point solver for convex QP"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve an instance from a manifest or a generator spec");
  solve_cmd->add_option("--variant", solve.variant, "short | long")->check(CLI::IsMember({"short", "long"}));
  solve_cmd->add_option("--delta", solve.delta, "Forcing parameter (default 0.3 short, 0.05 long)");
  solve_cmd->add_option("--theta", solve.theta, "N2 radius (short-step, default 0.1)");
  solve_cmd->add_option("--gamma", solve.gamma, "N_S width (long-step, default 0.5)");
  solve_cmd->add_option("--epsilon", solve.epsilon, "Target average complementarity");
  solve_cmd->add_option("--inexact", solve.inexact, "exact | inject | iterative")
      ->check(CLI::IsMember({"exact", "inject", "iterative"}));
  solve_cmd->add_option("--inject-shape", solve.inject_shape, "sphere | sign | aligned")
      ->check(CLI::IsMember({"sphere", "sign", "aligned"}));
  solve_cmd->add_option("--inject-fraction", solve.inject_fraction, "Fraction of delta used by injection")
      ->check(CLI::Range(0.0, 1.0));
  solve_cmd->add_option("--step-mode", solve.step_mode, "theory | practical")
      ->check(CLI::IsMember({"theory", "practical"}));
  solve_cmd->add_flag("--audit", solve.audit, "Assert every lemma bound at runtime");
  solve_cmd->add_option("--max-iters", solve.max_iters, "Iteration cap (0: theory-derived)");
  solve_cmd->add_option("--trace", solve.trace, "Write the per-iteration CSV trace here");
  auto* manifest_opt = solve_cmd->add_option("--manifest", solve.manifest, "Instance manifest (JSON)");
  auto* generate_opt = solve_cmd->add_option("--generate", solve.generate, "n,m,density,qrank,mu0");
  manifest_opt->excludes(generate_opt);
  solve_cmd->add_option("--seed", solve.seed, "Seed for generation and injection");

  CertArgs cert;
  auto* cert_cmd = app.add_subcommand("certify", "Check the certified parameter choices");
  cert_cmd->add_option("--theta", cert.theta);
  cert_cmd->add_option("--beta", cert.beta);
  cert_cmd->add_option("--delta-short", cert.delta_short);
  cert_cmd->add_option("--gamma", cert.gamma);
  cert_cmd->add_option("--sigma", cert.sigma);
  cert_cmd->add_option("--delta-long", cert.delta_long);
  cert_cmd->add_option("--csv", cert.csv, "Write the per-n report here");

  ScaleArgs scale;
  auto* scale_cmd = app.add_subcommand("scale", "Fit iteration count against n");
  scale_cmd->add_option("--variant", scale.variant)->check(CLI::IsMember({"short", "long"}));
  scale_cmd->add_option("--sizes", scale.sizes, "Problem sizes")->delimiter(',');
  scale_cmd->add_option("--epsilon", scale.epsilon);
  scale_cmd->add_option("--trials", scale.trials);
  scale_cmd->add_option("--seed", scale.seed);
  scale_cmd->add_option("--step-mode", scale.step_mode)->check(CLI::IsMember({"theory", "practical"}));
  scale_cmd->add_option("--csv", scale.csv);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a generated instance to disk");
  gen_cmd->add_option("--generate", gen.generate, "n,m,density,qrank,mu0")->required();
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out, "Output directory");
  gen_cmd->add_option("--stem", gen.stem, "File name stem");

  try {
    app.parse(argc, argv);
    if (solve_cmd->parsed() && solve.manifest.empty() && solve.generate.empty())
      throw CLI::RequiredError("--manifest or --generate");
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (solve_cmd->parsed()) return run_solve(solve, *log);
    if (cert_cmd->parsed()) return run_certify(cert);
    if (scale_cmd->parsed()) return run_scale(scale);
    if (gen_cmd->parsed()) return run_gen(gen);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const iipm::Error& e) {
    log->error("{}", e.what());
    if (e.code() == iipm::ErrorCode::InvalidArgument) return kExitUsage;
    if (e.code() == iipm::ErrorCode::IoError) return kExitBreakdown;
    return kExitInvalid;
  }
  return kExitUsage;
}
