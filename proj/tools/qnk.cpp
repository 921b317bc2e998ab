#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "qnk/broyden.hpp"
#include "qnk/experiment.hpp"
#include "qnk/krylov.hpp"
#include "qnk/problems.hpp"
#include "qnk/trace_io.hpp"
#include "qnk/trust_region.hpp"
#include "qnk/verify.hpp"

namespace {

using qnk::Vector;

int run_solve(const qnk::ExperimentConfig& config) {
  const auto trace = qnk::run_experiment(config);
  const auto& last = trace.records.back();
  std::printf("method=%s matrix=%s n=%ld iterations=%d rel_res=%.3e status=%s\n",
              trace.header.method.c_str(), trace.header.matrix_name.c_str(),
              static_cast<long>(trace.header.n), last.k, last.rel_res,
              std::string(qnk::to_string(trace.status)).c_str());
  if (trace.header.kappa_estimate)
    std::printf("kappa_estimate=%.3e\n", *trace.header.kappa_estimate);
  return 0;
}

int run_verify(const std::vector<std::string>& suites, const qnk::VerifyParams* override_params,
               const std::string& json_path) {
  bool all_pass = true;
  nlohmann::json out = nlohmann::json::array();
  for (const auto& suite : suites) {
    const qnk::VerifyParams params =
        override_params ? *override_params : qnk::default_params(suite);
    const auto report = qnk::run_suite(suite, params);
    out.push_back(report.to_json());
    for (const auto& check : report.checks)
      std::printf("%-4s %s/%s (measured=%.3e tol=%.3e)\n", check.pass ? "ok" : "FAIL",
                  suite.c_str(), check.name.c_str(), check.measured, check.tol);
    if (!report.pass()) all_pass = false;
  }
  if (!json_path.empty()) {
    std::ofstream f(json_path);
    if (!f) throw std::runtime_error("cannot open " + json_path);
    f << out.dump(2) << "\n";
  }
  std::printf("%s\n", all_pass ? "all properties hold" : "property failures detected");
  return all_pass ? 0 : 1;
}

struct TrunkArgs {
  std::string problem = "rosenbrock";
  std::string subsolver = "tcg";
  int memory = 5;
  double grad_tol = 1e-5;
  double delta0 = 1.0;
  int max_outer = 500;
  qnk::Index n = 100;
  qnk::Index samples = 2000;
  unsigned seed = 0;
  std::string idx_images, idx_labels;
};

qnk::TrSubsolver parse_subsolver(const std::string& s) {
  if (s == "tcg") return qnk::TrSubsolver::tcg;
  if (s == "lbfgs") return qnk::TrSubsolver::lbfgs;
  if (s == "diom") return qnk::TrSubsolver::diom;
  throw std::invalid_argument("unknown subsolver: " + s);
}

int run_trunk(const TrunkArgs& args) {
  qnk::TrustRegionConfig<double> config;
  config.delta0 = args.delta0;
  config.grad_tol = args.grad_tol;
  config.max_outer = args.max_outer;
  config.memory = args.memory;
  const auto subsolver = parse_subsolver(args.subsolver);

  qnk::TrNewtonResult<double> result;
  if (args.problem == "rosenbrock") {
    auto f = [](const Vector<double>& z) {
      const double a = 1 - z[0], b = z[1] - z[0] * z[0];
      return a * a + 100 * b * b;
    };
    auto grad = [](const Vector<double>& z) {
      Vector<double> g(2);
      const double b = z[1] - z[0] * z[0];
      g[0] = -2 * (1 - z[0]) - 400 * z[0] * b;
      g[1] = 200 * b;
      return g;
    };
    auto hvp = [](const Vector<double>& z, const Vector<double>& v) {
      Vector<double> r(2);
      const double h00 = 2 - 400 * (z[1] - 3 * z[0] * z[0]);
      r[0] = h00 * v[0] - 400 * z[0] * v[1];
      r[1] = -400 * z[0] * v[0] + 200 * v[1];
      return r;
    };
    Vector<double> z0(2);
    z0 << -1.2, 1.0;
    result = qnk::tr_newton<double>(f, grad, hvp, z0, config, subsolver);
  } else if (args.problem == "classification") {
    auto problem = args.idx_images.empty()
                       ? qnk::make_synthetic_classification<double>(args.n, args.samples, args.seed)
                       : qnk::make_idx_classification(args.idx_images, args.idx_labels);
    auto f = [&problem](const Vector<double>& z) { return problem.objective(z); };
    auto grad = [&problem](const Vector<double>& z) { return problem.gradient(z); };
    auto hvp = [&problem](const Vector<double>& z, const Vector<double>& v) {
      return problem.hessian_vector(z, v);
    };
    result = qnk::tr_newton<double>(f, grad, hvp, Vector<double>::Zero(problem.features()),
                                    config, subsolver);
  } else if (args.problem == "assimilation") {
    qnk::AssimilationConfig<double> acfg;
    acfg.n = args.n == 100 ? 40 : args.n;  // desk-scale default
    acfg.obs_dim = static_cast<int>(acfg.n / 2);
    acfg.seed = args.seed;
    const auto problem = qnk::AssimilationProblem<double>::make(acfg);
    auto f = [&problem](const Vector<double>& z) { return problem.objective(z); };
    auto grad = [&problem](const Vector<double>& z) { return problem.gradient(z); };
    auto hvp = [&problem](const Vector<double>& z, const Vector<double>& v) {
      return problem.hessian_vector(z, v);
    };
    result = qnk::tr_newton<double>(f, grad, hvp, problem.background(), config, subsolver);
  } else {
    throw std::invalid_argument("unknown problem: " + args.problem);
  }

  std::printf("problem=%s subsolver=%s m=%d\n", args.problem.c_str(), args.subsolver.c_str(),
              args.memory);
  std::printf("status=%s outer=%d f=%.6e grad_norm=%.3e\n",
              std::string(qnk::to_string(result.status)).c_str(), result.outer_iterations,
              result.f, result.grad_norm);
  std::printf("obj_eval=%ld grad_eval=%ld hprod_eval=%ld\n", result.obj_evals, result.grad_evals,
              result.hprod_evals);
  return result.status == qnk::TrStatus::converged ? 0 : 1;
}

int run_inspect(const std::string& path, const std::string& format) {
  const auto trace = qnk::read_trace(qnk::trace_format_from_string(format), path);
  std::printf("method=%s matrix=%s n=%ld rows=%zu status=%s\n", trace.header.method.c_str(),
              trace.header.matrix_name.c_str(), static_cast<long>(trace.header.n),
              trace.records.size(), std::string(qnk::to_string(trace.status)).c_str());
  if (!trace.records.empty()) {
    const auto& last = trace.records.back();
    std::printf("iterations=%d final_res=%.6e final_rel_res=%.6e final_q=%.6e\n", last.k,
                last.res_norm, last.rel_res, last.q);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadratic solver benchmark harness"};
  app.require_subcommand(1);

  // solve
  qnk::ExperimentConfig config;
  auto* solve = app.add_subcommand("solve", "run one solver on a linear system");
  solve->add_option("--matrix", config.matrix_file, "MatrixMarket file (synthetic if omitted)");
  solve->add_option("--n", config.n, "synthetic dimension");
  solve->add_option("--kappa", config.kappa, "synthetic condition number");
  solve->add_option("--seed", config.seed, "random seed");
  solve->add_option("--method", config.method, "cg|fom|diom|lbfgs|lsr1|broyden");
  solve->add_option("--memory,-m", config.memory, "window size for diom/lbfgs/lsr1");
  solve->add_option("--phi", config.phi, "broyden schedule: bfgs|dfp|sr1|constant:<v>");
  solve->add_option("--rtol", config.rtol, "relative residual tolerance");
  solve->add_option("--atol", config.atol, "absolute residual tolerance");
  solve->add_option("--maxit", config.maxit, "iteration cap (0: 50n)");
  solve->add_option("--rhs", config.rhs, "ones100|ones|e1|random");
  solve->add_option("--x0", config.x0, "zero|random");
  solve->add_option("--out", config.trace_path, "trace output path");
  solve->add_option("--format", config.format, "json|csv");
  bool no_kappa = false;
  solve->add_flag("--no-kappa-estimate", no_kappa, "skip condition estimation");

  // verify
  auto* verify = app.add_subcommand("verify", "run identity-verification suites");
  std::string suite = "all";
  qnk::VerifyParams vparams;
  bool have_n = false, have_kappa = false, have_seed = false, have_memory = false;
  verify->add_option("--suite", suite, "suite name or 'all'");
  verify->add_option("--n", vparams.n, "instance dimension")->each([&](const std::string&) { have_n = true; });
  verify->add_option("--kappa", vparams.kappa, "instance condition number")
      ->each([&](const std::string&) { have_kappa = true; });
  verify->add_option("--seed", vparams.seed, "random seed")
      ->each([&](const std::string&) { have_seed = true; });
  verify->add_option("--memory,-m", vparams.memory, "window size")
      ->each([&](const std::string&) { have_memory = true; });
  std::string verify_json;
  verify->add_option("--json", verify_json, "write machine-readable report here");

  // trunk
  TrunkArgs targs;
  auto* trunk = app.add_subcommand("trunk", "outer trust-region runs on the nonlinear problems");
  trunk->add_option("--problem", targs.problem, "rosenbrock|classification|assimilation");
  trunk->add_option("--subsolver", targs.subsolver, "tcg|lbfgs|diom");
  trunk->add_option("--memory,-m", targs.memory, "subsolver window");
  trunk->add_option("--grad-tol", targs.grad_tol, "outer gradient tolerance");
  trunk->add_option("--delta0", targs.delta0, "initial radius");
  trunk->add_option("--max-outer", targs.max_outer, "outer iteration cap");
  trunk->add_option("--n", targs.n, "feature/state dimension");
  trunk->add_option("--samples", targs.samples, "classification sample count");
  trunk->add_option("--seed", targs.seed, "random seed");
  trunk->add_option("--idx-images", targs.idx_images, "raw IDX image file");
  trunk->add_option("--idx-labels", targs.idx_labels, "raw IDX label file");

  // inspect
  std::string inspect_path, inspect_format = "json";
  auto* inspect = app.add_subcommand("inspect", "summarize a trace file");
  inspect->add_option("--trace", inspect_path, "trace file")->required();
  inspect->add_option("--format", inspect_format, "json|csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) {
      config.estimate_kappa = !no_kappa;
      return run_solve(config);
    }
    if (verify->parsed()) {
      const bool have_params = have_n || have_kappa || have_seed || have_memory;
      std::vector<std::string> suites;
      if (suite == "all")
        suites = qnk::suite_names();
      else
        suites.push_back(suite);
      return run_verify(suites, have_params ? &vparams : nullptr, verify_json);
    }
    if (trunk->parsed()) return run_trunk(targs);
    if (inspect->parsed()) return run_inspect(inspect_path, inspect_format);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
