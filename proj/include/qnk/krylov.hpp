#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

#include "qnk/core.hpp"

namespace qnk {

// --- preconditioned conjugate gradients ----------------------------------

/// Single-step PCG engine. Exposed so lockstep comparisons (Broyden gamma
/// measurement, DIOM identity checks) can advance a shadow run one
/// iteration at a time while sharing x0 and H0.
template <typename Scalar>
class PcgStepper {
 public:
  PcgStepper(const SymmetricOperator<Scalar>& A, const Vector<Scalar>& b,
             const Preconditioner<Scalar>& H0, Vector<Scalar> x0)
      : A_(&A), H0_(&H0), x_(std::move(x0)) {
    if (b.size() != A.dimension() || x_.size() != A.dimension() ||
        H0.dimension() != A.dimension())
      throw std::invalid_argument("PcgStepper: dimension mismatch");
    b_ = b;
    const Vector<Scalar> Ax = (*A_)(x_);
    g_ = Ax - b_;
    qhat_ = Scalar(0.5) * x_.dot(Ax) - b_.dot(x_);
    z_ = -(*H0_)(g_);
    rho_ = -g_.dot(z_);  // = g'H0g
    d_ = z_;
  }

  struct Step {
    Scalar alpha = Scalar(0);
    Scalar curvature = Scalar(0);
    bool nonpositive_curvature = false;
  };

  /// One iteration of PCG. On nonpositive curvature the state is left
  /// untouched and the flag is set.
  Step advance() {
    Step st;
    const Vector<Scalar> Ad = (*A_)(d_);
    st.curvature = d_.dot(Ad);
    if (st.curvature <= Scalar(0)) {
      st.nonpositive_curvature = true;
      return st;
    }
    const Scalar gd = g_.dot(d_);
    st.alpha = rho_ / st.curvature;
    qhat_ += st.alpha * gd + Scalar(0.5) * st.alpha * st.alpha * st.curvature;
    x_ += st.alpha * d_;
    g_ += st.alpha * Ad;
    z_ = -(*H0_)(g_);
    const Scalar rho_next = -g_.dot(z_);
    const Scalar beta = rho_next / rho_;
    d_ = z_ + beta * d_;
    rho_ = rho_next;
    ++k_;
    return st;
  }

  int k() const { return k_; }
  const Vector<Scalar>& x() const { return x_; }
  const Vector<Scalar>& gradient() const { return g_; }
  const Vector<Scalar>& direction() const { return d_; }
  Scalar rho() const { return rho_; }
  Scalar residual_norm() const { return g_.norm(); }
  Scalar q_hat() const { return qhat_; }  // q(x) without the constant term

 private:
  const SymmetricOperator<Scalar>* A_;
  const Preconditioner<Scalar>* H0_;
  Vector<Scalar> b_, x_, g_, z_, d_;
  Scalar rho_ = Scalar(0);
  Scalar qhat_ = Scalar(0);
  int k_ = 0;
};

template <typename Scalar>
struct PcgOptions {
  Scalar rtol = Scalar(1e-10);
  Scalar atol = Scalar(0);
  int maxit = 0;  // <= 0 means 10 * n
  bool record_history = false;
};

template <typename Scalar>
struct PcgResult {
  Vector<Scalar> x;
  SolveTrace<Scalar> trace;
  // history below is filled only when requested
  std::vector<Vector<Scalar>> iterates;
  std::vector<Vector<Scalar>> directions;
  std::vector<Vector<Scalar>> gradients;
};

template <typename Scalar>
PcgResult<Scalar> pcg_solve(const SymmetricOperator<Scalar>& A, const VectorArg<Scalar>& b,
                            const Preconditioner<Scalar>& H0, const VectorArg<Scalar>& x0,
                            const PcgOptions<Scalar>& opts) {
  const int maxit = opts.maxit > 0 ? opts.maxit : 10 * static_cast<int>(A.dimension());
  const Scalar bnorm = b.norm();
  const Scalar tol = std::max(opts.atol, opts.rtol * bnorm);

  PcgStepper<Scalar> stepper(A, b, H0, x0);
  PcgResult<Scalar> result;

  auto record_state = [&](int k) {
    TraceRecord<Scalar> rec;
    rec.k = k;
    rec.res_norm = stepper.residual_norm();
    rec.rel_res = bnorm > Scalar(0) ? rec.res_norm / bnorm : rec.res_norm;
    rec.q = stepper.q_hat();
    result.trace.append(rec);
    if (opts.record_history) {
      result.iterates.push_back(stepper.x());
      result.gradients.push_back(stepper.gradient());
    }
  };

  record_state(0);
  if (stepper.residual_norm() <= tol) {
    result.trace.finalize(SolveStatus::converged);
    result.x = stepper.x();
    return result;
  }

  for (int k = 0; k < maxit; ++k) {
    if (opts.record_history) result.directions.push_back(stepper.direction());
    const auto st = stepper.advance();
    result.trace.back().curvature = st.curvature;
    if (st.nonpositive_curvature) {
      result.trace.finalize(SolveStatus::nonpositive_curvature);
      result.x = stepper.x();
      return result;
    }
    result.trace.back().alpha = st.alpha;
    record_state(k + 1);
    if (stepper.residual_norm() <= tol) {
      result.trace.finalize(SolveStatus::converged);
      result.x = stepper.x();
      return result;
    }
  }
  result.trace.finalize(SolveStatus::max_iterations);
  result.x = stepper.x();
  return result;
}

template <typename Scalar>
PcgResult<Scalar> pcg_solve(const SymmetricOperator<Scalar>& A, const VectorArg<Scalar>& b,
                            const Preconditioner<Scalar>& H0, const VectorArg<Scalar>& x0,
                            Scalar rtol, Scalar atol, int maxit) {
  PcgOptions<Scalar> opts;
  opts.rtol = rtol;
  opts.atol = atol;
  opts.maxit = maxit;
  return pcg_solve(A, b, H0, x0, opts);
}

// --- Arnoldi process ------------------------------------------------------

/// Window of Arnoldi basis vectors keyed by absolute index (v_1, v_2, ...).
/// window == 0 keeps the full basis (FOM); otherwise only the m most recent
/// vectors are retained and each new vector is orthogonalized against them.
template <typename Scalar>
class ArnoldiBasis {
 public:
  ArnoldiBasis(int window, Vector<Scalar> v1) : window_(window) {
    if (window_ < 0) throw std::invalid_argument("ArnoldiBasis: negative window");
    vs_.push_back(std::move(v1));
  }

  static ArnoldiBasis full(Vector<Scalar> v1) { return ArnoldiBasis(0, std::move(v1)); }

  int window() const { return window_; }
  int first_index() const { return first_; }
  int last_index() const { return first_ + static_cast<int>(vs_.size()) - 1; }

  const Vector<Scalar>& v(int i) const {
    if (i < first_ || i > last_index())
      throw std::out_of_range("ArnoldiBasis: vector evicted or not yet generated");
    return vs_[static_cast<std::size_t>(i - first_)];
  }

  void push(Vector<Scalar> v) {
    vs_.push_back(std::move(v));
    if (window_ > 0) {
      while (static_cast<int>(vs_.size()) > window_) {
        vs_.pop_front();
        ++first_;
      }
    }
  }

 private:
  int window_ = 0;
  int first_ = 1;  // absolute index of vs_.front()
  std::deque<Vector<Scalar>> vs_;
};

template <typename Scalar>
struct ArnoldiStep {
  int k = 0;                                  // column index
  int first = 0;                              // first orthogonalization index m_k
  std::vector<Scalar> t;                      // t_{first..k, k}
  Scalar t_next = Scalar(0);                  // t_{k+1,k} >= 0
  Vector<Scalar> v_next;                      // unit next basis vector (empty on breakdown)
  bool happy_breakdown = false;

  Scalar t_at(int i) const { return t[static_cast<std::size_t>(i - first)]; }
};

/// One (incomplete) orthogonalization step: orthogonalizes A v_k against
/// v_i, i = max(1, k-m+1)..k, and normalizes the remainder. The new basis
/// vector is pushed into the window unless a happy breakdown occurs.
template <typename Scalar>
ArnoldiStep<Scalar> arnoldi_step(const SymmetricOperator<Scalar>& A, ArnoldiBasis<Scalar>& basis,
                                 int k) {
  if (k != basis.last_index())
    throw std::invalid_argument("arnoldi_step: v_k is not the newest window vector");
  ArnoldiStep<Scalar> step;
  step.k = k;
  step.first = basis.window() > 0 ? std::max(1, k - basis.window() + 1) : 1;
  if (step.first < basis.first_index())
    throw std::invalid_argument("arnoldi_step: window no longer holds v_{m_k}");

  Vector<Scalar> w = A(basis.v(k));
  const Scalar wnorm0 = w.norm();
  step.t.reserve(static_cast<std::size_t>(k - step.first + 1));
  for (int i = step.first; i <= k; ++i) {
    const Scalar tik = basis.v(i).dot(w);
    w -= tik * basis.v(i);
    step.t.push_back(tik);
  }
  step.t_next = w.norm();
  if (step.t_next <= std::numeric_limits<Scalar>::epsilon() * wnorm0) {
    step.happy_breakdown = true;
    step.t_next = Scalar(0);
    return step;
  }
  step.v_next = w / step.t_next;
  basis.push(step.v_next);
  return step;
}

// --- full orthogonalization method ---------------------------------------

template <typename Scalar>
struct FomOptions {
  Scalar rtol = Scalar(1e-10);
  Scalar atol = Scalar(0);
  int maxit = 0;  // <= 0 means n
  bool record_iterates = false;
};

template <typename Scalar>
struct FomResult {
  Vector<Scalar> x;
  SolveTrace<Scalar> trace;
  std::vector<Scalar> direct_res;    // ||b - A x_k||, k = 1..
  std::vector<Scalar> formula_res;   // t_{k+1,k} |e_k' w_k|
  Scalar max_residual_identity_dev = Scalar(0);
  std::vector<Vector<Scalar>> iterates;  // x_0, x_1, ... when requested
};

/// FOM: x_k = x_0 + V_k w_k with the Galerkin system T_k w_k = beta e_1
/// solved densely at every iteration. Stores the full basis; intended for
/// verification-scale problems.
template <typename Scalar>
FomResult<Scalar> fom_solve(const SymmetricOperator<Scalar>& A, const VectorArg<Scalar>& b,
                            const VectorArg<Scalar>& x0, const FomOptions<Scalar>& opts) {
  const Index n = A.dimension();
  const int maxit = opts.maxit > 0 ? opts.maxit : static_cast<int>(n);
  const Scalar bnorm = b.norm();
  const Scalar tol = std::max(opts.atol, opts.rtol * bnorm);

  FomResult<Scalar> result;
  result.x = x0;

  Vector<Scalar> Ax0 = A(x0);
  Vector<Scalar> r = b - Ax0;
  const Scalar beta = r.norm();

  auto record = [&](int k, Scalar res, Scalar q) {
    TraceRecord<Scalar> rec;
    rec.k = k;
    rec.res_norm = res;
    rec.rel_res = bnorm > Scalar(0) ? res / bnorm : res;
    rec.q = q;
    result.trace.append(rec);
  };

  record(0, beta, Scalar(0.5) * x0.dot(Ax0) - b.dot(x0));
  if (opts.record_iterates) result.iterates.push_back(x0);
  if (beta <= tol) {
    result.trace.finalize(SolveStatus::converged);
    return result;
  }

  ArnoldiBasis<Scalar> basis = ArnoldiBasis<Scalar>::full(r / beta);
  Matrix<Scalar> T = Matrix<Scalar>::Zero(maxit + 1, maxit);

  for (int k = 1; k <= maxit; ++k) {
    const auto step = arnoldi_step(A, basis, k);
    for (int i = step.first; i <= k; ++i) T(i - 1, k - 1) = step.t_at(i);
    T(k, k - 1) = step.t_next;

    const auto Tk = T.topLeftCorner(k, k);
    Eigen::PartialPivLU<Matrix<Scalar>> lu(Tk);
    const auto& U = lu.matrixLU();
    Scalar umax = Scalar(0), umin = std::numeric_limits<Scalar>::max();
    for (int i = 0; i < k; ++i) {
      umax = std::max(umax, std::abs(U(i, i)));
      umin = std::min(umin, std::abs(U(i, i)));
    }
    if (umin <= std::numeric_limits<Scalar>::epsilon() * Scalar(k) * umax) {
      result.trace.finalize(SolveStatus::breakdown);  // singular T_k
      return result;
    }
    Vector<Scalar> rhs = Vector<Scalar>::Zero(k);
    rhs[0] = beta;
    const Vector<Scalar> w = lu.solve(rhs);

    Vector<Scalar> x = x0;
    for (int i = 1; i <= k; ++i) x += w[i - 1] * basis.v(i);

    const Vector<Scalar> Ax = A(x);
    const Scalar res_direct = (b - Ax).norm();
    const Scalar res_formula = step.t_next * std::abs(w[k - 1]);
    result.direct_res.push_back(res_direct);
    result.formula_res.push_back(res_formula);
    if (res_direct > std::sqrt(std::numeric_limits<Scalar>::epsilon()) * bnorm) {
      const Scalar dev = std::abs(res_direct - res_formula) / res_direct;
      result.max_residual_identity_dev = std::max(result.max_residual_identity_dev, dev);
    }

    record(k, res_direct, Scalar(0.5) * x.dot(Ax) - b.dot(x));
    if (opts.record_iterates) result.iterates.push_back(x);
    result.x = x;

    if (res_direct <= tol) {
      result.trace.finalize(SolveStatus::converged);
      return result;
    }
    if (step.happy_breakdown) {
      // exact solution lies in the current subspace; residual should be ~0
      result.trace.finalize(res_direct <= std::max(tol, Scalar(10) * std::numeric_limits<Scalar>::epsilon() * bnorm)
                                ? SolveStatus::converged
                                : SolveStatus::breakdown);
      return result;
    }
  }
  result.trace.finalize(SolveStatus::max_iterations);
  return result;
}

template <typename Scalar>
FomResult<Scalar> fom_solve(const SymmetricOperator<Scalar>& A, const VectorArg<Scalar>& b,
                            const VectorArg<Scalar>& x0, Scalar rtol, int maxit) {
  FomOptions<Scalar> opts;
  opts.rtol = rtol;
  opts.maxit = maxit;
  return fom_solve(A, b, x0, opts);
}

// --- DIOM(m) ---------------------------------------------------------------

template <typename Scalar>
struct DiomOptions {
  Scalar rtol = Scalar(1e-10);
  Scalar atol = Scalar(0);
  int maxit = 0;  // <= 0 means 10 * n
  int refresh_every = 50;  // direct-residual refresh period
  bool record_p = false;
  bool record_iterates = false;
};

template <typename Scalar>
struct DiomResult {
  Vector<Scalar> x;
  SolveTrace<Scalar> trace;
  std::vector<Vector<Scalar>> p_dirs;    // p_1, p_2, ... when requested
  std::vector<Vector<Scalar>> iterates;  // x_0, x_1, ... when requested
};

namespace detail {

/// Sliding window of vectors keyed by absolute index >= 1.
template <typename Scalar>
class VecWindow {
 public:
  explicit VecWindow(int capacity) : cap_(capacity) {}
  void push(Vector<Scalar> v) {
    buf_.push_back(std::move(v));
    while (cap_ > 0 && static_cast<int>(buf_.size()) > cap_) {
      buf_.pop_front();
      ++first_;
    }
  }
  const Vector<Scalar>& at(int i) const { return buf_[static_cast<std::size_t>(i - first_)]; }
  int first() const { return first_; }
  int last() const { return first_ + static_cast<int>(buf_.size()) - 1; }

 private:
  int cap_;
  int first_ = 1;
  std::deque<Vector<Scalar>> buf_;
};

}  // namespace detail

/// DIOM(m): incomplete orthogonalization with window m and an incrementally
/// updated LU factorization of the banded Hessenberg matrix. The residual
/// norm is tracked through t_{k+1,k} |zeta_k| / |u_{k,k}| and refreshed
/// against the true residual periodically and at declared convergence.
template <typename Scalar>
DiomResult<Scalar> diom_solve(const SymmetricOperator<Scalar>& A, const VectorArg<Scalar>& b,
                              const VectorArg<Scalar>& x0, int m, const DiomOptions<Scalar>& opts) {
  if (m < 1) throw std::invalid_argument("diom_solve: window must be >= 1");
  const Index n = A.dimension();
  const int maxit = opts.maxit > 0 ? opts.maxit : 10 * static_cast<int>(n);
  const Scalar bnorm = b.norm();
  const Scalar tol = std::max(opts.atol, opts.rtol * bnorm);

  DiomResult<Scalar> result;
  result.x = x0;

  Vector<Scalar> Ax0 = A(x0);
  Vector<Scalar> r0 = b - Ax0;
  const Scalar beta = r0.norm();

  auto record = [&](int k, Scalar res, Scalar q) {
    TraceRecord<Scalar> rec;
    rec.k = k;
    rec.res_norm = res;
    rec.rel_res = bnorm > Scalar(0) ? res / bnorm : res;
    rec.q = q;
    result.trace.append(rec);
  };

  record(0, beta, Scalar(0.5) * x0.dot(Ax0) - b.dot(x0));
  if (opts.record_iterates) result.iterates.push_back(x0);
  if (beta <= tol) {
    result.trace.finalize(SolveStatus::converged);
    return result;
  }

  ArnoldiBasis<Scalar> basis(m, r0 / beta);
  detail::VecWindow<Scalar> p_window(m);
  std::vector<Scalar> ell;  // ell[i] = l_{i+1,i}, absolute subdiagonal entries
  ell.reserve(static_cast<std::size_t>(maxit) + 1);

  Vector<Scalar> x = x0;
  Scalar zeta = beta;           // zeta_k for the current column
  Scalar calibration = Scalar(1);  // direct/formula residual ratio, updated on refresh

  for (int k = 1; k <= maxit; ++k) {
    const Vector<Scalar> vk = basis.v(k);  // the push below may evict v_k when m = 1
    const auto step = arnoldi_step(A, basis, k);
    const int mk = step.first;

    // forward substitution on the banded column: entries above the band are zero
    Scalar u_prev = Scalar(0);
    std::vector<Scalar> u(static_cast<std::size_t>(k - mk + 1));
    for (int i = mk; i <= k; ++i) {
      Scalar ui = step.t_at(i);
      if (i > 1) ui -= ell[static_cast<std::size_t>(i - 2)] * u_prev;
      u[static_cast<std::size_t>(i - mk)] = ui;
      u_prev = ui;
    }
    const Scalar ukk = u.back();
    if (ukk == Scalar(0)) {
      result.trace.finalize(SolveStatus::breakdown);  // abort: A is singular
      result.x = x;
      return result;
    }

    Vector<Scalar> p = vk;
    for (int i = mk; i <= k - 1; ++i) p -= u[static_cast<std::size_t>(i - mk)] * p_window.at(i);
    p /= ukk;
    p_window.push(p);
    if (opts.record_p) result.p_dirs.push_back(p);

    x += zeta * p;
    if (opts.record_iterates) result.iterates.push_back(x);

    const Scalar ell_next = step.t_next / ukk;
    ell.push_back(ell_next);
    const Scalar zeta_next = -ell_next * zeta;

    // residual estimate from the last component of z_k, calibrated by the
    // most recent direct refresh
    Scalar res_formula = step.t_next * std::abs(zeta) / std::abs(ukk);
    Scalar res = calibration * res_formula;
    Vector<Scalar> r_formula = (-step.t_next * zeta / ukk) * (step.happy_breakdown ? Vector<Scalar>::Zero(n).eval() : step.v_next);
    Scalar q = -Scalar(0.5) * x.dot(b + r_formula);

    bool refreshed = false;
    if (res <= tol || step.happy_breakdown || (opts.refresh_every > 0 && k % opts.refresh_every == 0)) {
      const Vector<Scalar> r_direct = b - A(x);
      const Scalar res_direct = r_direct.norm();
      if (res_formula > Scalar(0)) calibration = std::max(Scalar(1), res_direct / res_formula);
      res = res_direct;
      q = -Scalar(0.5) * x.dot(b + r_direct);
      refreshed = true;
    }

    record(k, res, q);
    result.trace.back().u_kk = ukk;
    result.trace.back().zeta = zeta;
    result.x = x;

    if (refreshed && res <= tol) {
      result.trace.finalize(SolveStatus::converged);
      return result;
    }
    if (step.happy_breakdown) {
      result.trace.finalize(res <= std::max(tol, Scalar(10) * std::numeric_limits<Scalar>::epsilon() * bnorm)
                                ? SolveStatus::converged
                                : SolveStatus::breakdown);
      return result;
    }
    zeta = zeta_next;
  }
  result.trace.finalize(SolveStatus::max_iterations);
  return result;
}

template <typename Scalar>
DiomResult<Scalar> diom_solve(const SymmetricOperator<Scalar>& A, const VectorArg<Scalar>& b,
                              const VectorArg<Scalar>& x0, int m, Scalar rtol, int maxit) {
  DiomOptions<Scalar> opts;
  opts.rtol = rtol;
  opts.maxit = maxit;
  return diom_solve(A, b, x0, m, opts);
}

// --- DIOM / PCG identity report -------------------------------------------

/// Deviations of the exact-arithmetic identities tying DIOM(m) to PCG,
/// measured on lockstep runs (same SPD system, x0, and H0 = I). The DIOM
/// run must record p directions and the PCG run its history.
template <typename Scalar>
struct DiomIdentityReport {
  int compared = 0;                      // iterations entering the comparison
  Scalar max_alpha_dev = Scalar(0);      // max |u_{k+1,k+1} alpha_k - 1|
  bool zeta_sign_ok = true;              // zeta_k == (-1)^{k-1} |zeta_k|
  bool gp_sign_ok = true;                // sign g_k'p_{k+1} == (-1)^{k-1}
  Scalar max_direction_dev = Scalar(0);  // max rel ||zeta_{k+1}u_{k+1,k+1}p_{k+1} - d_k||
  Scalar g0p1 = Scalar(0);               // measured g_0'p_1
  Scalar g0p1_expected = Scalar(0);      // -beta / u_{1,1}
};

template <typename Scalar>
DiomIdentityReport<Scalar> diom_identity_report(const DiomResult<Scalar>& diom,
                                                const PcgResult<Scalar>& pcg) {
  const auto& drec = diom.trace.records();
  const auto& prec = pcg.trace.records();
  if (diom.p_dirs.empty() || pcg.directions.empty() || pcg.gradients.empty())
    throw std::invalid_argument("diom_identity_report: runs must record directions");
  // DIOM row k+1 carries u_{k+1,k+1} and zeta_{k+1}; PCG row k carries alpha_k.
  const int K = static_cast<int>(std::min({drec.size() - 1, static_cast<std::size_t>(pcg.directions.size()),
                                           diom.p_dirs.size()}));
  if (K < 1) throw std::invalid_argument("diom_identity_report: traces too short");

  DiomIdentityReport<Scalar> report;
  report.compared = K;

  const Scalar beta = drec[0].res_norm;
  const Scalar u11 = *drec[1].u_kk;
  report.g0p1 = pcg.gradients[0].dot(diom.p_dirs[0]);
  report.g0p1_expected = -beta / u11;

  for (int k = 0; k < K; ++k) {
    const Scalar ukk = *drec[static_cast<std::size_t>(k) + 1].u_kk;
    const Scalar zk1 = *drec[static_cast<std::size_t>(k) + 1].zeta;  // zeta_{k+1}
    if (prec[static_cast<std::size_t>(k)].alpha) {
      const Scalar alpha = *prec[static_cast<std::size_t>(k)].alpha;
      report.max_alpha_dev = std::max(report.max_alpha_dev, std::abs(ukk * alpha - Scalar(1)));
    }
    // zeta sign alternation; zeta_{k+1} lives on DIOM row k+1
    const int sign_expected = (k % 2 == 0) ? 1 : -1;  // (-1)^{(k+1)-1}
    if (zk1 != Scalar(0) && (zk1 > Scalar(0)) != (sign_expected > 0)) report.zeta_sign_ok = false;

    // d_k^PCG = zeta_{k+1} u_{k+1,k+1} p_{k+1}
    const Vector<Scalar>& dk = pcg.directions[static_cast<std::size_t>(k)];
    const Vector<Scalar> recon = zk1 * ukk * diom.p_dirs[static_cast<std::size_t>(k)];
    const Scalar dev = (recon - dk).norm() / dk.norm();
    report.max_direction_dev = std::max(report.max_direction_dev, dev);

    // sign of g_k'p_{k+1} versus (-1)^{k-1}, for k >= 1
    if (k >= 1 && static_cast<std::size_t>(k) < pcg.gradients.size()) {
      const Scalar gp = pcg.gradients[static_cast<std::size_t>(k)].dot(diom.p_dirs[static_cast<std::size_t>(k)]);
      const Scalar floor = std::numeric_limits<Scalar>::epsilon() *
                           pcg.gradients[static_cast<std::size_t>(k)].norm() *
                           diom.p_dirs[static_cast<std::size_t>(k)].norm() * Scalar(100);
      if (std::abs(gp) > floor) {
        const int expected = (k % 2 == 1) ? 1 : -1;  // (-1)^{k-1}
        if ((gp > Scalar(0)) != (expected > 0)) report.gp_sign_ok = false;
      }
    }
  }
  return report;
}

}  // namespace qnk
