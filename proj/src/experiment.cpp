#include "qnk/experiment.hpp"

#include <random>

#include "qnk/broyden.hpp"
#include "qnk/krylov.hpp"
#include "qnk/limited_memory.hpp"
#include "qnk/matrix_market.hpp"
#include "qnk/problems.hpp"

namespace qnk {

nlohmann::json ExperimentConfig::echo() const {
  return nlohmann::json{{"matrix_file", matrix_file},
                        {"n", n},
                        {"kappa", kappa},
                        {"seed", seed},
                        {"method", method},
                        {"memory", memory},
                        {"phi", phi},
                        {"rtol", rtol},
                        {"atol", atol},
                        {"maxit", maxit},
                        {"rhs", rhs},
                        {"x0", x0}};
}

ConditionEstimate estimate_condition(const SymmetricOperator<double>& A, unsigned seed) {
  std::mt19937_64 rng(seed + 17);
  const Index n = A.dimension();
  ConditionEstimate est;

  Vector<double> v = random_vector<double>(n, rng).normalized();
  for (int it = 0; it < 100; ++it) {
    Vector<double> Av = A(v);
    est.lambda_max = v.dot(Av);
    const double norm = Av.norm();
    if (norm == 0) break;
    v = Av / norm;
  }

  // inexact inverse iteration: each inverse application is a loose CG solve
  Vector<double> w = random_vector<double>(n, rng).normalized();
  const auto H0 = Preconditioner<double>::identity(n);
  for (int it = 0; it < 20; ++it) {
    PcgOptions<double> opts;
    opts.rtol = 1e-2;
    opts.maxit = 250;
    auto inner = pcg_solve(A, w, H0, Vector<double>::Zero(n), opts);
    const double norm = inner.x.norm();
    if (norm == 0) break;
    w = inner.x / norm;
    est.lambda_min = w.dot(A(w));
  }
  return est;
}

namespace {

PhiSchedule<double> parse_phi(const std::string& spec) {
  if (spec == "bfgs") return PhiSchedule<double>::bfgs();
  if (spec == "dfp") return PhiSchedule<double>::dfp();
  if (spec == "sr1") return PhiSchedule<double>::sr1();
  if (spec.rfind("constant:", 0) == 0)
    return PhiSchedule<double>::constant(std::stod(spec.substr(9)));
  throw std::invalid_argument("unknown phi schedule: " + spec);
}

Vector<double> make_rhs(const std::string& spec, Index n, std::mt19937_64& rng) {
  if (spec == "ones100") return Vector<double>::Constant(n, 100.0);
  if (spec == "ones") return Vector<double>::Ones(n);
  if (spec == "e1") {
    Vector<double> b = Vector<double>::Zero(n);
    b[0] = 1.0;
    return b;
  }
  if (spec == "random") return random_vector<double>(n, rng);
  throw std::invalid_argument("unknown rhs spec: " + spec);
}

Vector<double> make_x0(const std::string& spec, Index n, std::mt19937_64& rng) {
  if (spec == "zero") return Vector<double>::Zero(n);
  if (spec == "random") return random_vector<double>(n, rng);
  throw std::invalid_argument("unknown x0 spec: " + spec);
}

}  // namespace

TraceFile run_experiment(const ExperimentConfig& config) {
  SymmetricOperator<double> A;
  TraceFile trace;
  trace.header.method = config.method;
  trace.header.config_echo = config.echo();

  if (!config.matrix_file.empty()) {
    auto data = read_matrix_market_data(config.matrix_file);
    trace.header.matrix_name = data.name;
    trace.header.n = data.n;
    auto shared = std::make_shared<MatrixMarketData>(std::move(data));
    A = SymmetricOperator<double>(shared->n, [shared](const Vector<double>& v) -> Vector<double> {
      return shared->lower.selfadjointView<Eigen::Lower>() * v;
    });
  } else {
    A = synthetic_spd(config.n, config.kappa, config.seed);
    trace.header.matrix_name = "synthetic";
    trace.header.n = config.n;
    if (config.estimate_kappa) trace.header.kappa_estimate = estimate_condition(A, config.seed).kappa();
  }

  const Index n = A.dimension();
  std::mt19937_64 rng(config.seed);
  const Vector<double> b = make_rhs(config.rhs, n, rng);
  const Vector<double> x0 = make_x0(config.x0, n, rng);
  const auto H0 = Preconditioner<double>::identity(n);
  const int maxit = config.maxit > 0 ? config.maxit : 50 * static_cast<int>(n);

  if (config.method == "cg") {
    PcgOptions<double> opts{config.rtol, config.atol, maxit, false};
    auto r = pcg_solve(A, b, H0, x0, opts);
    trace.status = r.trace.status();
    trace.records = r.trace.records();
  } else if (config.method == "fom") {
    FomOptions<double> opts;
    opts.rtol = config.rtol;
    opts.atol = config.atol;
    opts.maxit = std::min<int>(maxit, static_cast<int>(n));
    auto r = fom_solve(A, b, x0, opts);
    trace.status = r.trace.status();
    trace.records = r.trace.records();
  } else if (config.method == "diom") {
    DiomOptions<double> opts;
    opts.rtol = config.rtol;
    opts.atol = config.atol;
    opts.maxit = maxit;
    auto r = diom_solve(A, b, x0, config.memory, opts);
    trace.status = r.trace.status();
    trace.records = r.trace.records();
  } else if (config.method == "lbfgs" || config.method == "lsr1") {
    LimitedMemoryOptions<double> opts;
    opts.rtol = config.rtol;
    opts.atol = config.atol;
    opts.maxit = maxit;
    auto r = config.method == "lbfgs" ? lbfgs_solve(A, b, H0, x0, config.memory, opts)
                                      : lsr1_solve(A, b, H0, x0, config.memory, opts);
    trace.status = r.trace.status();
    trace.records = r.trace.records();
  } else if (config.method == "broyden") {
    QuadraticModel<double> model(A, b, 0.0);
    BroydenOptions<double> opts;
    opts.rtol = config.rtol;
    opts.atol = config.atol;
    opts.maxit = maxit;
    opts.shadow_pcg = true;  // measured gamma lands in the trace
    auto r = broyden_solve(model, x0, H0, parse_phi(config.phi), opts);
    trace.status = r.trace.status();
    trace.records = r.trace.records();
  } else {
    throw std::invalid_argument("unknown method: " + config.method);
  }

  if (!config.trace_path.empty())
    export_trace(trace, trace_format_from_string(config.format), config.trace_path);
  return trace;
}

}  // namespace qnk
