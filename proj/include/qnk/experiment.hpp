#pragma once

#include <optional>
#include <string>

#include "qnk/core.hpp"
#include "qnk/trace_io.hpp"

namespace qnk {

/// One linear-system run of the benchmark harness. Defaults reproduce the
/// positive-definite study setup: x0 = 0 and b = 100 * ones.
struct ExperimentConfig {
  // matrix source: a MatrixMarket file when non-empty, synthetic otherwise
  std::string matrix_file;
  Index n = 200;
  double kappa = 1e6;
  unsigned seed = 0;

  std::string method = "cg";  // cg | fom | diom | lbfgs | lsr1 | broyden
  int memory = 50;            // window for diom/lbfgs/lsr1
  std::string phi = "bfgs";   // broyden schedule: bfgs | dfp | sr1 | constant:<v>

  double rtol = 1e-10;
  double atol = 0.0;
  int maxit = 0;  // <= 0 means 50 * n

  std::string rhs = "ones100";  // ones100 | ones | e1 | random
  std::string x0 = "zero";      // zero | random

  bool estimate_kappa = true;  // synthetic matrices only

  std::string trace_path;       // empty: do not write
  std::string format = "json";  // json | csv

  nlohmann::json echo() const;
};

/// Rough extreme-eigenvalue estimates by power iteration (largest) and
/// inexact inverse iteration with a loose CG inner solve (smallest).
struct ConditionEstimate {
  double lambda_max = 0;
  double lambda_min = 0;
  double kappa() const { return lambda_min > 0 ? lambda_max / lambda_min : 0; }
};

ConditionEstimate estimate_condition(const SymmetricOperator<double>& A, unsigned seed = 0);

/// Runs the configured solver and assembles the trace file (also written to
/// config.trace_path when set). Solver breakdowns are recorded in the
/// status, not raised.
TraceFile run_experiment(const ExperimentConfig& config);

}  // namespace qnk
