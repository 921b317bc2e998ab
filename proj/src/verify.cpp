#include "qnk/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qnk/broyden.hpp"
#include "qnk/krylov.hpp"
#include "qnk/limited_memory.hpp"
#include "qnk/problems.hpp"
#include "qnk/trust_region.hpp"

namespace qnk {

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json checks_json = nlohmann::json::array();
  for (const auto& c : checks)
    checks_json.push_back(nlohmann::json{
        {"name", c.name}, {"pass", c.pass}, {"measured", c.measured}, {"tol", c.tol}});
  return nlohmann::json{{"suite", suite},
                        {"params",
                         {{"n", params.n},
                          {"kappa", params.kappa},
                          {"seed", params.seed},
                          {"memory", params.memory}}},
                        {"pass", pass()},
                        {"checks", checks_json}};
}

namespace {

struct Instance {
  Matrix<double> dense;
  SymmetricOperator<double> A;
  Vector<double> b;
  Vector<double> x0;
  QuadraticModel<double> model;
};

Instance make_instance(Index n, double kappa, unsigned seed) {
  Matrix<double> dense = synthetic_spd_matrix(n, kappa, seed);
  SymmetricOperator<double> A = operator_from_dense(dense);
  std::mt19937_64 rng(seed + 101);
  Vector<double> b = random_vector<double>(n, rng);
  QuadraticModel<double> model(A, b, 0.0);
  return Instance{std::move(dense), A, std::move(b), Vector<double>::Zero(n), std::move(model)};
}

void add_check(VerifyReport& report, const std::string& name, double measured, double tol) {
  report.checks.push_back(VerifyCheck{name, measured <= tol, measured, tol});
}

void add_bool(VerifyReport& report, const std::string& name, bool pass) {
  report.checks.push_back(VerifyCheck{name, pass, pass ? 0.0 : 1.0, 0.0});
}

double angle_between(const Vector<double>& a, const Vector<double>& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) return 0;
  const Vector<double> ahat = a / na;
  const Vector<double> bhat = b / nb;
  const double ortho = (ahat - ahat.dot(bhat) * bhat).norm();
  return std::asin(std::min(1.0, ortho));
}

double phi_of(PhiSchedule<double>::Kind kind, double value) {
  switch (kind) {
    case PhiSchedule<double>::Kind::bfgs: return 1.0;
    case PhiSchedule<double>::Kind::dfp: return 0.0;
    default: return value;
  }
}

BroydenResult<double> run_broyden(const Instance& inst, const PhiSchedule<double>& schedule,
                                  int maxit, bool histories = false) {
  BroydenOptions<double> opts;
  opts.rtol = 1e-13;
  opts.maxit = maxit;
  opts.shadow_pcg = true;
  opts.record_directions = true;
  opts.record_pairs = histories;
  opts.record_h_history = histories;
  return broyden_solve(inst.model, inst.x0, Preconditioner<double>::identity(inst.b.size()),
                       schedule, opts);
}

std::vector<double> shadow_rhos(const BroydenResult<double>& r) {
  std::vector<double> rho;
  for (const auto& rec : r.shadow->trace.records()) rho.push_back(rec.res_norm * rec.res_norm);
  return rho;
}

// ----- gamma: collinearity, recurrence, and the named formulas -------------

VerifyReport gamma_suite(const VerifyParams& p) {
  VerifyReport report;
  report.suite = "gamma";
  report.params = p;
  const Instance inst = make_instance(p.n, p.kappa, p.seed);
  const int maxit = std::min<int>(static_cast<int>(p.n), 40);

  struct Sched {
    const char* name;
    PhiSchedule<double> schedule;
    double phi;
  };
  const Sched scheds[] = {{"bfgs", PhiSchedule<double>::bfgs(), 1.0},
                          {"dfp", PhiSchedule<double>::dfp(), 0.0},
                          {"phi-half", PhiSchedule<double>::constant(0.5), 0.5}};

  for (const auto& sched : scheds) {
    const auto r = run_broyden(inst, sched.schedule, maxit, sched.phi == 0.0);
    const auto& rows = r.trace.records();
    const auto rho = shadow_rhos(r);

    double max_angle = 0;
    const std::size_t K = std::min(r.directions.size(), r.shadow->directions.size());
    for (std::size_t k = 0; k < K; ++k)
      max_angle = std::max(max_angle, angle_between(r.directions[k], r.shadow->directions[k]));
    add_check(report, std::string("collinearity-angle-") + sched.name, max_angle, 1e-6);

    // measured least-squares gamma against the recurrence
    double max_dev = 0, max_bfgs_dev = 0;
    double gamma_rec = 1.0;
    for (std::size_t k = 0; k + 1 < K && k + 1 < rho.size(); ++k) {
      gamma_rec = gamma_next(gamma_rec, sched.phi, rho[k], rho[k + 1]);
      if (!rows[k + 1].gamma) break;
      const double measured = *rows[k + 1].gamma;
      max_dev = std::max(max_dev, std::abs(measured - gamma_rec) / std::abs(gamma_rec));
    }
    if (sched.phi == 1.0) {
      for (std::size_t k = 0; k < K; ++k)
        if (rows[k].gamma) max_bfgs_dev = std::max(max_bfgs_dev, std::abs(*rows[k].gamma - 1.0));
      add_check(report, "bfgs-gamma-equals-one", max_bfgs_dev, 1e-10);
    } else {
      add_check(report, std::string("gamma-recurrence-") + sched.name, max_dev, 1e-6);
    }

    // phi-critical: dense formula vs the SPD closed form, and phi_c < 0
    if (sched.phi == 0.0) {
      double max_phic_dev = 0;
      bool all_negative = true;
      const std::size_t KH = std::min({r.pairs.size(), r.h_history.size(), K});
      for (std::size_t k = 0; k + 1 < KH && k + 1 < rho.size(); ++k) {
        const Matrix<double>& H =
            k == 0 ? Matrix<double>::Identity(p.n, p.n).eval() : r.h_history[k - 1];
        const double dense = phi_critical(H, r.pairs[k].first, r.pairs[k].second);
        const double lemma = phi_critical_spd(*rows[k].gamma, rho[k], rho[k + 1]);
        max_phic_dev = std::max(max_phic_dev, std::abs(dense - lemma) / std::abs(lemma));
        if (dense >= 0) all_negative = false;
      }
      add_check(report, "phi-critical-lemma-agreement", max_phic_dev, 1e-8);
      add_bool(report, "phi-critical-negative", all_negative);
    }
  }

  // SR1 gamma via its closed form, using alpha from the shadow PCG run
  {
    const auto r = run_broyden(inst, PhiSchedule<double>::sr1(), maxit);
    const auto& rows = r.trace.records();
    const auto& shadow_rows = r.shadow->trace.records();
    const auto rho = shadow_rhos(r);
    double max_dev = 0;
    for (std::size_t k = 0; k + 1 < rows.size() && k + 1 < rho.size(); ++k) {
      if (!rows[k].gamma || !rows[k + 1].gamma || !shadow_rows[k].alpha) break;
      const double gk = *rows[k].gamma;
      const double alpha = *shadow_rows[k].alpha;
      const double num = (gk - alpha) * rho[k];
      const double expected = num / (num + rho[k + 1]);
      max_dev = std::max(max_dev, std::abs(*rows[k + 1].gamma - expected) / std::abs(expected));
    }
    add_check(report, "sr1-gamma-formula", max_dev, 1e-6);
  }
  return report;
}

// ----- steplen: ordering of optimal step lengths in the convex class --------

VerifyReport steplen_suite(const VerifyParams& p) {
  VerifyReport report;
  report.suite = "steplen";
  report.params = p;
  const Instance inst = make_instance(p.n, p.kappa, p.seed);
  const int maxit = std::min<int>(static_cast<int>(p.n), 40);

  const double phis[] = {0.0, 0.5, 1.0};
  std::vector<std::vector<double>> alphas;
  std::vector<double> alphas_pcg;
  for (double phi : phis) {
    const auto r = run_broyden(inst, PhiSchedule<double>::constant(phi), maxit);
    std::vector<double> a;
    for (const auto& rec : r.trace.records())
      if (rec.alpha) a.push_back(*rec.alpha);
    alphas.push_back(std::move(a));
    if (alphas_pcg.empty())
      for (const auto& rec : r.shadow->trace.records())
        if (rec.alpha) alphas_pcg.push_back(*rec.alpha);
  }

  const std::pair<int, int> pairs[] = {{0, 1}, {1, 2}, {0, 2}};
  for (auto [lo, hi] : pairs) {
    double worst = 0;
    const std::size_t K = std::min(alphas[lo].size(), alphas[hi].size());
    for (std::size_t k = 0; k < K; ++k)
      worst = std::max(worst, alphas[hi][k] - alphas[lo][k]);  // alpha^(2) <= alpha^(1)
    add_check(report,
              "alpha-ordering-phi" + std::to_string(lo) + "-phi" + std::to_string(hi), worst,
              1e-12);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    double worst = 0;
    bool positive = true;
    const std::size_t K = std::min(alphas[i].size(), alphas_pcg.size());
    for (std::size_t k = 0; k < K; ++k) {
      worst = std::max(worst, alphas_pcg[k] - alphas[i][k]);  // alpha_pcg <= alpha_phi
      if (!(alphas_pcg[k] > 0)) positive = false;
    }
    add_check(report, "pcg-alpha-below-phi" + std::to_string(i), worst, 1e-12);
    add_bool(report, "pcg-alpha-positive-phi" + std::to_string(i), positive);
  }
  return report;
}

// ----- secant: hereditary secant equation across the trajectory -------------

VerifyReport secant_suite(const VerifyParams& p) {
  VerifyReport report;
  report.suite = "secant";
  report.params = p;
  const Instance inst = make_instance(p.n, p.kappa, p.seed);
  const int maxit = std::min<int>(static_cast<int>(p.n), 40);

  struct Sched {
    const char* name;
    PhiSchedule<double> schedule;
  };
  const Sched scheds[] = {{"bfgs", PhiSchedule<double>::bfgs()},
                          {"dfp", PhiSchedule<double>::dfp()},
                          {"phi-half", PhiSchedule<double>::constant(0.5)}};
  for (const auto& sched : scheds) {
    const auto r = run_broyden(inst, sched.schedule, maxit, true);
    double worst = 0;
    for (std::size_t k = 0; k < r.h_history.size(); ++k) {
      const Matrix<double>& H = r.h_history[k];  // H_{k+1}
      for (std::size_t i = 0; i <= k; ++i) {
        const auto& [s, y] = r.pairs[i];
        worst = std::max(worst, (H * y - s).norm() / s.norm());
      }
    }
    add_check(report, std::string("hereditary-secant-") + sched.name, worst, 1e-8);
  }
  return report;
}

// ----- lbfgs-cg: LBFGS(m) coincidence with PCG and the dense equality -------

VerifyReport lbfgs_cg_suite(const VerifyParams& p) {
  VerifyReport report;
  report.suite = "lbfgs-cg";
  report.params = p;
  const Instance inst = make_instance(p.n, p.kappa, p.seed);
  const int maxit = std::min<int>(static_cast<int>(p.n), 40);
  const auto H0 = Preconditioner<double>::identity(p.n);

  PcgOptions<double> popts;
  popts.rtol = 1e-13;
  popts.maxit = maxit;
  popts.record_history = true;
  const auto pcg = pcg_solve(inst.A, inst.b, H0, inst.x0, popts);

  for (int m : {1, 5, static_cast<int>(p.n)}) {
    LimitedMemoryOptions<double> lopts;
    lopts.rtol = 1e-13;
    lopts.maxit = maxit;
    lopts.record_history = true;
    const auto lb = lbfgs_solve(inst.A, inst.b, H0, inst.x0, m, lopts);

    double worst_x = 0, worst_d = 0, worst_alpha = 0;
    const std::size_t K = std::min(lb.iterates.size(), pcg.iterates.size());
    for (std::size_t k = 1; k < K; ++k)
      worst_x = std::max(worst_x, (lb.iterates[k] - pcg.iterates[k]).norm() /
                                      pcg.iterates[k].norm());
    const std::size_t KD = std::min(lb.directions.size(), pcg.directions.size());
    for (std::size_t k = 0; k < KD; ++k)
      worst_d = std::max(worst_d, (lb.directions[k] - pcg.directions[k]).norm() /
                                      pcg.directions[k].norm());
    const auto& lrows = lb.trace.records();
    const auto& prows = pcg.trace.records();
    for (std::size_t k = 0; k + 1 < std::min(lrows.size(), prows.size()); ++k) {
      if (!lrows[k].alpha || !prows[k].alpha) break;
      worst_alpha =
          std::max(worst_alpha, std::abs(*lrows[k].alpha - *prows[k].alpha) / *prows[k].alpha);
    }
    const std::string tag = "-m" + std::to_string(m);
    add_check(report, "lbfgs-pcg-iterates" + tag, worst_x, 1e-8);
    add_check(report, "lbfgs-pcg-directions" + tag, worst_d, 1e-8);
    add_check(report, "lbfgs-pcg-steplengths" + tag, worst_alpha, 1e-8);
  }

  // window m >= k reproduces the dense BFGS operator
  {
    const auto dense_run = run_broyden(inst, PhiSchedule<double>::bfgs(),
                                       std::min<int>(maxit, 12), true);
    LbfgsMemory<double> mem = LbfgsMemory<double>::identity_base(p.n, static_cast<int>(p.n));
    std::mt19937_64 rng(p.seed + 7);
    double worst = 0;
    for (std::size_t k = 0; k < dense_run.pairs.size(); ++k) {
      mem.push(dense_run.pairs[k].first, dense_run.pairs[k].second);
      const Matrix<double>& Hk = dense_run.h_history[k];
      for (int probe = 0; probe < 3; ++probe) {
        const Vector<double> v = random_vector<double>(p.n, rng);
        const Vector<double> dense = Hk * v;
        worst = std::max(worst, (mem.apply(v) - dense).norm() / dense.norm());
      }
    }
    add_check(report, "lbfgs-dense-equality", worst, 1e-9);
  }

  // Table-style storage and work accounting
  {
    const int m = std::max(2, p.memory);
    const Index n = p.n;
    LbfgsMemory<double> lmem = LbfgsMemory<double>::identity_base(n, m);
    Lsr1Memory<double> smem = Lsr1Memory<double>::identity_base(n, m);
    std::mt19937_64 rng(p.seed + 13);
    bool counts_ok = true;
    for (int k = 0; k < 2 * m; ++k) {
      const Vector<double> s = random_vector<double>(n, rng);
      const Vector<double> y = s + 0.01 * random_vector<double>(n, rng);
      lmem.push(s, y);
      try {
        smem.push(s, y);
      } catch (const BreakdownError&) {
      }
      if (lmem.stored_vector_count() != 2 * std::min(k + 1, m)) counts_ok = false;
    }
    add_bool(report, "lbfgs-stored-vectors-2m", counts_ok && lmem.stored_vector_count() == 2 * m);
    add_bool(report, "lsr1-stored-vectors-m", smem.stored_vector_count() == m);

    // full-window LSR1 iteration: one insertion plus one application
    const std::size_t before = smem.multiplications();
    const Vector<double> s = random_vector<double>(n, rng);
    const Vector<double> y = s + 0.01 * random_vector<double>(n, rng);
    smem.push(s, y);
    smem.apply(y);
    const std::size_t used = smem.multiplications() - before;
    const std::size_t expected = 4 * static_cast<std::size_t>(m) * static_cast<std::size_t>(n) +
                                 static_cast<std::size_t>(n);
    add_bool(report, "lsr1-work-4mn-plus-n", used == expected);
  }
  return report;
}

// ----- diom-identities: Krylov coincidence and the DIOM/PCG identities -------

VerifyReport diom_identities_suite(const VerifyParams& p) {
  VerifyReport report;
  report.suite = "diom-identities";
  report.params = p;
  const Instance inst = make_instance(p.n, p.kappa, p.seed);
  const int maxit = std::min<int>(static_cast<int>(p.n), 40);
  const auto H0 = Preconditioner<double>::identity(p.n);

  PcgOptions<double> popts;
  popts.rtol = 1e-13;
  popts.maxit = maxit;
  popts.record_history = true;
  const auto pcg = pcg_solve(inst.A, inst.b, H0, inst.x0, popts);

  FomOptions<double> fopts;
  fopts.rtol = 1e-13;
  fopts.maxit = maxit;
  fopts.record_iterates = true;
  const auto fom = fom_solve(inst.A, inst.b, inst.x0, fopts);
  add_check(report, "fom-residual-identity", fom.max_residual_identity_dev, 1e-8);
  {
    double worst = 0;
    const std::size_t K = std::min(fom.iterates.size(), pcg.iterates.size());
    for (std::size_t k = 1; k < K; ++k)
      worst = std::max(worst,
                       (fom.iterates[k] - pcg.iterates[k]).norm() / pcg.iterates[k].norm());
    add_check(report, "fom-pcg-iterates", worst, 1e-8);
  }

  for (int m : {1, 5, static_cast<int>(p.n)}) {
    DiomOptions<double> dopts;
    dopts.rtol = 1e-13;
    dopts.maxit = maxit;
    dopts.record_p = true;
    dopts.record_iterates = true;
    const auto diom = diom_solve(inst.A, inst.b, inst.x0, m, dopts);

    double worst = 0;
    const std::size_t K = std::min(diom.iterates.size(), pcg.iterates.size());
    for (std::size_t k = 1; k < K; ++k)
      worst = std::max(worst,
                       (diom.iterates[k] - pcg.iterates[k]).norm() / pcg.iterates[k].norm());
    add_check(report, "diom-pcg-iterates-m" + std::to_string(m), worst, 1e-8);

    // direct residual against the zeta-based estimate at every iterate
    double worst_res = 0;
    for (std::size_t k = 1; k < diom.iterates.size(); ++k) {
      const double direct = (inst.b - inst.A(diom.iterates[k])).norm();
      const double traced = diom.trace.records()[k].res_norm;
      if (direct > 1e-12 * inst.b.norm())
        worst_res = std::max(worst_res, std::abs(direct - traced) / direct);
    }
    add_check(report, "diom-residual-identity-m" + std::to_string(m), worst_res, 1e-8);

    if (m == static_cast<int>(p.n)) {
      const auto idrep = diom_identity_report(diom, pcg);
      add_check(report, "ukk-alpha-product", idrep.max_alpha_dev, 1e-7);
      add_bool(report, "zeta-sign-alternation", idrep.zeta_sign_ok);
      add_check(report, "pcg-direction-reconstruction", idrep.max_direction_dev, 1e-7);
      add_bool(report, "gkpk1-sign-pattern", idrep.gp_sign_ok);
      add_check(report, "g0p1-value",
                std::abs(idrep.g0p1 - idrep.g0p1_expected) / std::abs(idrep.g0p1_expected),
                1e-10);
    }

    // window conjugacy of the p directions: |p_i'A p_j| small for i != j
    {
      double worst_conj = 0;
      const std::size_t P = diom.p_dirs.size();
      std::vector<Vector<double>> Ap(P);
      std::vector<double> anorm(P);
      for (std::size_t i = 0; i < P; ++i) {
        Ap[i] = inst.A(diom.p_dirs[i]);
        anorm[i] = std::sqrt(std::max(0.0, diom.p_dirs[i].dot(Ap[i])));
      }
      for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = i + 1; j < P && j < i + static_cast<std::size_t>(m); ++j) {
          const double denom = anorm[i] * anorm[j];
          if (denom > 0)
            worst_conj = std::max(worst_conj, std::abs(diom.p_dirs[i].dot(Ap[j])) / denom);
        }
      add_check(report, "p-conjugacy-m" + std::to_string(m), worst_conj, 1e-8);
    }
  }

  // within-window orthogonality and tridiagonality of the full Hessenberg
  {
    std::mt19937_64 rng(p.seed + 23);
    Vector<double> v1 = random_vector<double>(p.n, rng).normalized();
    ArnoldiBasis<double> basis = ArnoldiBasis<double>::full(v1);
    double worst_ortho = 0, worst_norm = 0, worst_tri = 0;
    for (int k = 1; k <= maxit; ++k) {
      const auto step = arnoldi_step(inst.A, basis, k);
      if (step.happy_breakdown) break;
      for (int i = step.first; i < k - 1; ++i)
        worst_tri = std::max(worst_tri, std::abs(step.t_at(i)));
      for (int i = basis.first_index(); i <= basis.last_index(); ++i) {
        worst_norm = std::max(worst_norm, std::abs(basis.v(i).norm() - 1.0));
        for (int j = i + 1; j <= basis.last_index(); ++j)
          worst_ortho = std::max(worst_ortho, std::abs(basis.v(i).dot(basis.v(j))));
      }
    }
    add_check(report, "arnoldi-unit-norms", worst_norm, 1e-12);
    add_check(report, "arnoldi-window-orthogonality", worst_ortho, 1e-8);
    add_check(report, "arnoldi-tridiagonality", worst_tri, 1e-8);
  }
  return report;
}

// ----- quadratic termination --------------------------------------------------

VerifyReport quadratic_termination_suite(const VerifyParams& p) {
  VerifyReport report;
  report.suite = "quadratic-termination";
  report.params = p;
  const Instance inst = make_instance(p.n, p.kappa, p.seed);
  const int n = static_cast<int>(p.n);
  const auto H0 = Preconditioner<double>::identity(p.n);

  {
    const auto r = pcg_solve(inst.A, inst.b, H0, inst.x0, 1e-10, 0.0, n);
    add_bool(report, "cg-terminates-in-n", r.trace.status() == SolveStatus::converged);
  }
  {
    FomOptions<double> opts;
    opts.rtol = 1e-10;
    opts.maxit = n;
    const auto r = fom_solve(inst.A, inst.b, inst.x0, opts);
    add_bool(report, "fom-terminates-in-n", r.trace.status() == SolveStatus::converged);
  }
  for (const auto& [name, schedule] :
       {std::pair{"bfgs", PhiSchedule<double>::bfgs()}, {"dfp", PhiSchedule<double>::dfp()}}) {
    const auto r = broyden_solve(inst.model, inst.x0, H0, schedule, 1e-10, n);
    add_bool(report, std::string(name) + "-terminates-in-n",
             r.trace.status() == SolveStatus::converged);
  }

  // SR1 full run: H_n inverts A when no breakdown occurs
  {
    BroydenOptions<double> opts;
    opts.rtol = 0.0;
    opts.atol = 0.0;
    opts.maxit = n;
    const auto r = broyden_solve(inst.model, inst.x0, H0, PhiSchedule<double>::sr1(), opts);
    if (r.breakdown) {
      add_bool(report, "sr1-full-run-inverts-A (skipped: breakdown)", true);
    } else {
      const double dev = (r.H * inst.dense - Matrix<double>::Identity(p.n, p.n)).norm();
      add_check(report, "sr1-full-run-inverts-A", dev, 1e-6);
    }
  }
  return report;
}

// ----- trust-region monotonicity ----------------------------------------------

VerifyReport tr_monotonicity_suite(const VerifyParams& p) {
  VerifyReport report;
  report.suite = "tr-monotonicity";
  report.params = p;
  const Index n = 10;
  std::mt19937_64 rng(p.seed + 31);
  std::uniform_real_distribution<double> radius(0.05, 2.0);

  bool in_ball = true, decrease_ok = true, q_monotone = true, norm_monotone = true;
  for (int i = 0; i < 100; ++i) {
    const bool indefinite = i >= 50;
    const Matrix<double> dense = indefinite
                                     ? synthetic_indefinite_matrix<double>(n, 50.0, p.seed + i)
                                     : synthetic_spd_matrix<double>(n, 50.0, p.seed + i);
    const QuadraticModel<double> model(operator_from_dense(dense),
                                       random_vector<double>(n, rng), 0.0);
    const double delta = radius(rng) * model.b.norm();
    SubproblemOptions<double> opts;
    opts.rtol = 1e-8;
    for (int solver = 0; solver < 3; ++solver) {
      SubproblemResult<double> sub;
      if (solver == 0) sub = steihaug_tcg(model, delta, opts);
      else if (solver == 1) sub = tr_lbfgs(model, delta, p.memory, opts);
      else sub = tr_diom(model, delta, p.memory, opts);
      if (sub.x.norm() > delta * (1 + 1e-12)) in_ball = false;
      if (sub.iterations > 0 && !(sub.model_decrease >= 0)) decrease_ok = false;
      for (std::size_t k = 0; k + 1 < sub.path_q.size(); ++k)
        if (sub.path_q[k + 1] > sub.path_q[k] + 1e-10 * (1 + std::abs(sub.path_q[k])))
          q_monotone = false;
      for (std::size_t k = 0; k + 1 < sub.path_norm.size(); ++k)
        if (sub.path_norm[k + 1] < sub.path_norm[k] - 1e-12 * (1 + sub.path_norm[k]))
          norm_monotone = false;
    }
  }
  add_bool(report, "step-in-ball", in_ball);
  add_bool(report, "model-decrease-nonnegative", decrease_ok);
  add_bool(report, "inner-q-monotone", q_monotone);
  add_bool(report, "inner-norm-nondecreasing", norm_monotone);

  // unconstrained limit reproduces PCG on SPD models
  {
    double worst = 0;
    for (int i = 0; i < 3; ++i) {
      const Matrix<double> dense = synthetic_spd_matrix<double>(n, 50.0, p.seed + i);
      const SymmetricOperator<double> A = operator_from_dense(dense);
      const Vector<double> b = random_vector<double>(n, rng);
      const QuadraticModel<double> model(A, b, 0.0);
      PcgOptions<double> popts;
      popts.rtol = 1e-9;
      popts.maxit = 2 * static_cast<int>(n);
      popts.record_history = true;
      const auto pcg = pcg_solve(A, b, Preconditioner<double>::identity(n),
                                 Vector<double>::Zero(n), popts);
      SubproblemOptions<double> opts;
      opts.rtol = 1e-9;
      opts.record_iterates = true;
      const double huge_delta = 1e100;
      const SubproblemResult<double> subs[] = {steihaug_tcg(model, huge_delta, opts),
                                               tr_lbfgs(model, huge_delta, p.memory, opts),
                                               tr_diom(model, huge_delta, p.memory, opts)};
      for (const auto& sub : subs) {
        const std::size_t K = std::min(sub.iterates.size(), pcg.iterates.size());
        for (std::size_t k = 1; k < K; ++k)
          worst = std::max(worst,
                           (sub.iterates[k] - pcg.iterates[k]).norm() / pcg.iterates[k].norm());
      }
    }
    add_check(report, "unconstrained-pcg-coincidence", worst, 1e-8);
  }

  // outer loop: accepted steps never increase f, rejected steps keep z
  {
    auto f = [](const Vector<double>& z) {
      const double a = 1 - z[0];
      const double b = z[1] - z[0] * z[0];
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
      Matrix<double> H(2, 2);
      H(0, 0) = 2 - 400 * (z[1] - 3 * z[0] * z[0]);
      H(0, 1) = H(1, 0) = -400 * z[0];
      H(1, 1) = 200;
      return (H * v).eval();
    };
    Vector<double> z0(2);
    z0 << -1.2, 1.0;
    TrustRegionConfig<double> config;
    const auto r = tr_newton<double>(f, grad, hvp, z0, config, TrSubsolver::tcg);
    bool outer_ok = r.status == TrStatus::converged;
    for (std::size_t j = 0; j + 1 < r.log.size(); ++j) {
      if (r.log[j].accepted && r.log[j + 1].f > r.log[j].f + 1e-14) outer_ok = false;
      if (!r.log[j].accepted && r.log[j + 1].f != r.log[j].f) outer_ok = false;
    }
    add_bool(report, "outer-f-monotone-on-accepted", outer_ok);
  }
  return report;
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"gamma",           "steplen",
          "secant",          "lbfgs-cg",
          "diom-identities", "quadratic-termination",
          "tr-monotonicity"};
}

VerifyParams default_params(const std::string& suite) {
  VerifyParams p;
  if (suite == "quadratic-termination") {
    p.n = 30;
    p.kappa = 1e3;
  }
  return p;
}

VerifyReport run_suite(const std::string& suite, const VerifyParams& params) {
  if (suite == "gamma") return gamma_suite(params);
  if (suite == "steplen") return steplen_suite(params);
  if (suite == "secant") return secant_suite(params);
  if (suite == "lbfgs-cg") return lbfgs_cg_suite(params);
  if (suite == "diom-identities") return diom_identities_suite(params);
  if (suite == "quadratic-termination") return quadratic_termination_suite(params);
  if (suite == "tr-monotonicity") return tr_monotonicity_suite(params);
  throw std::invalid_argument("unknown verify suite: " + suite);
}

const std::map<std::string, std::vector<std::string>>& suite_coverage() {
  static const std::map<std::string, std::vector<std::string>> coverage = {
      {"gamma",
       {"broyden.direction-collinearity", "broyden.gamma-recurrence",
        "broyden.named-gamma-formulas"}},
      {"steplen", {"broyden.step-length-ordering"}},
      {"secant", {"broyden.hereditary-secant"}},
      {"lbfgs-cg",
       {"limited_memory.lbfgs-pcg-coincidence", "limited_memory.lbfgs-dense-equality",
        "limited_memory.memory-accounting"}},
      {"diom-identities",
       {"krylov.iterate-coincidence", "krylov.window-orthogonality", "krylov.p-conjugacy",
        "krylov.residual-identity"}},
      {"quadratic-termination",
       {"broyden.hereditary-secant", "krylov.iterate-coincidence"}},
      {"tr-monotonicity",
       {"trust_region.step-in-ball-decrease", "trust_region.inner-monotonicity",
        "trust_region.unconstrained-pcg-coincidence", "trust_region.outer-monotonicity"}},
  };
  return coverage;
}

std::vector<std::string> all_invariant_ids() {
  return {
      "broyden.hereditary-secant",
      "broyden.direction-collinearity",
      "broyden.gamma-recurrence",
      "broyden.step-length-ordering",
      "broyden.named-gamma-formulas",
      "limited_memory.lbfgs-pcg-coincidence",
      "limited_memory.lbfgs-dense-equality",
      "limited_memory.memory-accounting",
      "krylov.iterate-coincidence",
      "krylov.window-orthogonality",
      "krylov.p-conjugacy",
      "krylov.residual-identity",
      "trust_region.step-in-ball-decrease",
      "trust_region.inner-monotonicity",
      "trust_region.unconstrained-pcg-coincidence",
      "trust_region.outer-monotonicity",
  };
}

}  // namespace qnk
