#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "qnk/core.hpp"
#include "qnk/krylov.hpp"

namespace qnk {

// --- Broyden family primitives ---------------------------------------------

/// One Broyden-class update of the inverse-Hessian approximation:
///   H' = H + ss'/s'y - Hy y'H / y'Hy + phi (y'Hy) vv',
///   v  = s/s'y - Hy/y'Hy.
/// phi = 1 gives BFGS, phi = 0 gives DFP. The result satisfies H'y = s.
template <typename Scalar>
Matrix<Scalar> broyden_update(const Matrix<Scalar>& H, const Vector<Scalar>& s,
                              const Vector<Scalar>& y, Scalar phi) {
  const Scalar eps = curvature_epsilon<Scalar>();
  const Scalar sy = s.dot(y);
  if (std::abs(sy) <= eps * s.norm() * y.norm())
    throw BreakdownError(BreakdownKind::curvature_pair, "broyden_update: s'y ~ 0");
  const Vector<Scalar> Hy = H * y;
  const Scalar yHy = y.dot(Hy);
  if (std::abs(yHy) <= eps * y.squaredNorm())
    throw BreakdownError(BreakdownKind::denominator, "broyden_update: y'Hy ~ 0");
  const Vector<Scalar> v = s / sy - Hy / yHy;
  Matrix<Scalar> Hn = H;
  Hn.noalias() += (s * s.transpose()) / sy;
  Hn.noalias() -= (Hy * Hy.transpose()) / yHy;
  Hn.noalias() += (phi * yHy) * (v * v.transpose());
  return Hn;
}

/// The Broyden parameter that turns the family update into SR1:
///   phi = y's / (s - Hy)'y.
template <typename Scalar>
Scalar sr1_phi(const Matrix<Scalar>& H, const Vector<Scalar>& s, const Vector<Scalar>& y) {
  const Vector<Scalar> z = s - H * y;
  const Scalar den = z.dot(y);
  if (std::abs(den) <= curvature_epsilon<Scalar>() * z.norm() * y.norm())
    throw BreakdownError(BreakdownKind::sr1_denominator, "sr1_phi: (s - Hy)'y ~ 0");
  return y.dot(s) / den;
}

/// Critical parameter phi_c: the unique value making the updated H singular,
///   phi_c = (y's)^2 / ((y's)^2 - (y'Hy)(s'Bs)),  B = H^{-1}.
/// solve_h must return the solution t of H t = s.
template <typename Scalar>
Scalar phi_critical(const Matrix<Scalar>& H, const Vector<Scalar>& s, const Vector<Scalar>& y,
                    const std::function<Vector<Scalar>(const Vector<Scalar>&)>& solve_h) {
  const Scalar ys = y.dot(s);
  const Scalar yHy = y.dot(H * y);
  const Scalar sBs = s.dot(solve_h(s));
  const Scalar num = ys * ys;
  const Scalar den = num - yHy * sBs;
  if (std::abs(den) <= std::numeric_limits<Scalar>::epsilon() * (num + std::abs(yHy * sBs)))
    throw BreakdownError(BreakdownKind::singular_update, "phi_critical: zero denominator");
  return num / den;
}

template <typename Scalar>
Scalar phi_critical(const Matrix<Scalar>& H, const Vector<Scalar>& s, const Vector<Scalar>& y) {
  Eigen::PartialPivLU<Matrix<Scalar>> lu(H);
  return phi_critical<Scalar>(H, s, y,
                              [&lu](const Vector<Scalar>& v) { return lu.solve(v).eval(); });
}

/// Closed form of phi_c in the SPD exact-line-search regime:
///   phi_c = -gamma_k (g_k'H0 g_k) / (g_{k+1}'H0 g_{k+1}).
template <typename Scalar>
Scalar phi_critical_spd(Scalar gamma, Scalar rho_k, Scalar rho_k1) {
  return -gamma * rho_k / rho_k1;
}

/// Proportionality recurrence between a Broyden direction and the PCG
/// direction (rho_k = g_k'H0 g_k):
///   gamma_{k+1} = (gamma_k rho_k + phi_k rho_{k+1}) / (gamma_k rho_k + rho_{k+1}).
template <typename Scalar>
Scalar gamma_next(Scalar gamma, Scalar phi, Scalar rho_k, Scalar rho_k1) {
  const Scalar den = gamma * rho_k + rho_k1;
  if (std::abs(den) <= std::numeric_limits<Scalar>::epsilon() *
                           (std::abs(gamma * rho_k) + std::abs(rho_k1)))
    throw BreakdownError(BreakdownKind::singular_update, "gamma_next: phi = phi_c");
  return (gamma * rho_k + phi * rho_k1) / den;
}

// --- phi schedules -----------------------------------------------------------

template <typename Scalar>
struct PhiStepContext {
  int k = 0;
  const Matrix<Scalar>& H;
  const Vector<Scalar>& s;
  const Vector<Scalar>& y;
};

template <typename Scalar>
class PhiSchedule {
 public:
  enum class Kind { bfgs, dfp, sr1, constant, custom };
  using CustomFn = std::function<Scalar(const PhiStepContext<Scalar>&)>;

  static PhiSchedule bfgs() { return PhiSchedule(Kind::bfgs, Scalar(1)); }
  static PhiSchedule dfp() { return PhiSchedule(Kind::dfp, Scalar(0)); }
  static PhiSchedule sr1() { return PhiSchedule(Kind::sr1, Scalar(0)); }
  static PhiSchedule constant(Scalar value) { return PhiSchedule(Kind::constant, value); }
  static PhiSchedule custom(CustomFn fn) {
    PhiSchedule s(Kind::custom, Scalar(0));
    s.fn_ = std::move(fn);
    return s;
  }

  Kind kind() const { return kind_; }

  /// Parameter for the update built from (s, y) at iteration k. May throw
  /// BreakdownError for the SR1 choice.
  Scalar operator()(const PhiStepContext<Scalar>& ctx) const {
    switch (kind_) {
      case Kind::bfgs: return Scalar(1);
      case Kind::dfp: return Scalar(0);
      case Kind::constant: return value_;
      case Kind::sr1: return sr1_phi(ctx.H, ctx.s, ctx.y);
      case Kind::custom: return fn_(ctx);
    }
    return value_;
  }

 private:
  PhiSchedule(Kind kind, Scalar value) : kind_(kind), value_(value) {}
  Kind kind_;
  Scalar value_;
  CustomFn fn_;
};

// --- full-memory Broyden solve ----------------------------------------------

template <typename Scalar>
struct BroydenOptions {
  Scalar rtol = Scalar(1e-10);
  Scalar atol = Scalar(0);
  int maxit = 0;            // <= 0 means 10 * n
  bool shadow_pcg = false;  // lockstep PCG run; measured gamma lands in the trace
  bool record_directions = false;
  bool record_pairs = false;
  bool record_h_history = false;
};

template <typename Scalar>
struct BroydenResult {
  Vector<Scalar> x;
  SolveTrace<Scalar> trace;
  Matrix<Scalar> H;  // final approximation
  std::optional<BreakdownKind> breakdown;
  std::vector<Vector<Scalar>> directions;
  std::vector<std::pair<Vector<Scalar>, Vector<Scalar>>> pairs;  // (s_k, y_k)
  std::vector<Matrix<Scalar>> h_history;                         // H_1, H_2, ...
  std::optional<PcgResult<Scalar>> shadow;
};

template <typename Scalar>
Matrix<Scalar> dense_from_preconditioner(const Preconditioner<Scalar>& H0) {
  const Index n = H0.dimension();
  if (H0.is_identity()) return Matrix<Scalar>::Identity(n, n);
  Matrix<Scalar> H(n, n);
  Vector<Scalar> e = Vector<Scalar>::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e[j] = Scalar(1);
    H.col(j) = H0(e);
    e[j] = Scalar(0);
  }
  return H;
}

/// Quasi-Newton iteration d_k = -H_k g_k with exact line search and the
/// Broyden-family update selected by the phi schedule.
template <typename Scalar>
BroydenResult<Scalar> broyden_solve(const QuadraticModel<Scalar>& model,
                                    const VectorArg<Scalar>& x0,
                                    const Preconditioner<Scalar>& H0,
                                    const PhiSchedule<Scalar>& schedule,
                                    const BroydenOptions<Scalar>& opts) {
  const auto& A = model.A;
  const Index n = A.dimension();
  const int maxit = opts.maxit > 0 ? opts.maxit : 10 * static_cast<int>(n);
  const Scalar bnorm = model.b.norm();
  const Scalar tol = std::max(opts.atol, opts.rtol * bnorm);

  BroydenResult<Scalar> result;
  result.H = dense_from_preconditioner(H0);

  Vector<Scalar> x = x0;
  Vector<Scalar> Ax = A(x);
  Vector<Scalar> g = Ax - model.b;
  Scalar q = Scalar(0.5) * x.dot(Ax) - model.b.dot(x) + model.c;

  std::optional<PcgStepper<Scalar>> shadow;
  if (opts.shadow_pcg) {
    shadow.emplace(A, model.b, H0, x0);
    result.shadow.emplace();
  }

  auto record_shadow_state = [&](int k) {
    if (!shadow) return;
    TraceRecord<Scalar> rec;
    rec.k = k;
    rec.res_norm = shadow->residual_norm();
    rec.rel_res = bnorm > Scalar(0) ? rec.res_norm / bnorm : rec.res_norm;
    rec.q = shadow->q_hat() + model.c;
    result.shadow->trace.append(rec);
    result.shadow->gradients.push_back(shadow->gradient());
    result.shadow->iterates.push_back(shadow->x());
  };

  auto record_state = [&](int k) {
    TraceRecord<Scalar> rec;
    rec.k = k;
    rec.res_norm = g.norm();
    rec.rel_res = bnorm > Scalar(0) ? rec.res_norm / bnorm : rec.res_norm;
    rec.q = q;
    result.trace.append(rec);
  };

  record_state(0);
  record_shadow_state(0);
  if (g.norm() <= tol) {
    result.trace.finalize(SolveStatus::converged);
    if (result.shadow) result.shadow->trace.finalize(SolveStatus::converged);
    result.x = x;
    return result;
  }

  for (int k = 0; k < maxit; ++k) {
    const Vector<Scalar> d = (-(result.H * g)).eval();
    if (opts.record_directions) result.directions.push_back(d);

    if (shadow) {
      const Vector<Scalar>& dp = shadow->direction();
      const Scalar dpdp = dp.squaredNorm();
      if (dpdp > Scalar(0)) result.trace.back().gamma = dp.dot(d) / dpdp;
      result.shadow->directions.push_back(dp);
    }

    const Vector<Scalar> Ad = A(d);
    const Scalar curv = d.dot(Ad);
    result.trace.back().curvature = curv;
    if (curv <= Scalar(0)) {
      result.trace.finalize(SolveStatus::nonpositive_curvature);
      if (result.shadow) result.shadow->trace.finalize(SolveStatus::max_iterations);
      result.x = x;
      return result;
    }
    const Scalar gd = g.dot(d);
    const Scalar alpha = -gd / curv;
    result.trace.back().alpha = alpha;

    const Vector<Scalar> s = alpha * d;
    const Vector<Scalar> y = alpha * Ad;  // = A s
    x += s;
    g += y;
    q += alpha * gd + Scalar(0.5) * alpha * alpha * curv;
    if (opts.record_pairs) result.pairs.emplace_back(s, y);

    try {
      const Scalar phi = schedule(PhiStepContext<Scalar>{k, result.H, s, y});
      result.H = broyden_update(result.H, s, y, phi);
    } catch (const BreakdownError& err) {
      result.breakdown = err.kind();
      record_state(k + 1);
      result.trace.finalize(SolveStatus::breakdown);
      if (result.shadow) result.shadow->trace.finalize(SolveStatus::max_iterations);
      result.x = x;
      return result;
    }
    if (opts.record_h_history) result.h_history.push_back(result.H);

    if (shadow) {
      const auto st = shadow->advance();
      result.shadow->trace.back().alpha = st.alpha;
      result.shadow->trace.back().curvature = st.curvature;
      if (st.nonpositive_curvature) shadow.reset();  // stop measuring
    }

    record_state(k + 1);
    record_shadow_state(k + 1);
    if (g.norm() <= tol) {
      result.trace.finalize(SolveStatus::converged);
      if (result.shadow) result.shadow->trace.finalize(SolveStatus::max_iterations);
      result.x = x;
      return result;
    }
  }
  result.trace.finalize(SolveStatus::max_iterations);
  if (result.shadow) result.shadow->trace.finalize(SolveStatus::max_iterations);
  result.x = x;
  return result;
}

template <typename Scalar>
BroydenResult<Scalar> broyden_solve(const QuadraticModel<Scalar>& model,
                                    const VectorArg<Scalar>& x0,
                                    const Preconditioner<Scalar>& H0,
                                    const PhiSchedule<Scalar>& schedule, Scalar rtol, int maxit) {
  BroydenOptions<Scalar> opts;
  opts.rtol = rtol;
  opts.maxit = maxit;
  return broyden_solve(model, x0, H0, schedule, opts);
}

}  // namespace qnk
