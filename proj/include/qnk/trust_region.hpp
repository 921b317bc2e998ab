#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "qnk/core.hpp"
#include "qnk/krylov.hpp"
#include "qnk/limited_memory.hpp"

namespace qnk {

/// Positive root of ||x + tau d||_2 = Delta (x strictly inside the ball).
/// Evaluated in the cancellation-free arrangement of the quadratic formula.
template <typename Scalar>
Scalar boundary_tau(const VectorArg<Scalar>& x, const VectorArg<Scalar>& d, Scalar delta) {
  const Scalar a = d.squaredNorm();
  if (a == Scalar(0)) throw std::invalid_argument("boundary_tau: d = 0");
  const Scalar b = x.dot(d);
  const Scalar c = x.squaredNorm() - delta * delta;
  const Scalar disc = std::sqrt(b * b - a * c);
  return b <= Scalar(0) ? (disc - b) / a : -c / (b + disc);
}

enum class SubproblemStatus {
  interior_converged,
  boundary,
  nonpositive_curvature_boundary,
  max_iterations,
};

inline std::string_view to_string(SubproblemStatus s) {
  switch (s) {
    case SubproblemStatus::interior_converged: return "interior_converged";
    case SubproblemStatus::boundary: return "boundary";
    case SubproblemStatus::nonpositive_curvature_boundary: return "nonpositive_curvature_boundary";
    case SubproblemStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

template <typename Scalar>
struct SubproblemResult {
  Vector<Scalar> x;
  SubproblemStatus status = SubproblemStatus::max_iterations;
  Scalar model_decrease = Scalar(0);  // q(0) - q(x) >= 0
  int iterations = 0;
  int hessian_products = 0;
  std::vector<Scalar> path_q;     // model value at each inner iterate (incl. x_0 = 0)
  std::vector<Scalar> path_norm;  // ||x_k||
  std::vector<Vector<Scalar>> iterates;  // when requested
};

template <typename Scalar>
struct SubproblemOptions {
  Scalar rtol = Scalar(1e-10);
  int maxit = 0;  // <= 0 means 2 * n
  bool record_iterates = false;
};

namespace detail {

template <typename Scalar>
Scalar inner_tolerance(Scalar g0_norm, Scalar rtol) {
  return g0_norm * std::max(Scalar(1e-12), rtol);
}

}  // namespace detail

/// Steihaug truncated CG from x_0 = 0: exits inside on the forcing
/// tolerance, at the boundary upon crossing, or along a nonpositive
/// curvature direction followed to the boundary.
template <typename Scalar>
SubproblemResult<Scalar> steihaug_tcg(const QuadraticModel<Scalar>& model, Scalar delta,
                                      const SubproblemOptions<Scalar>& opts = {}) {
  const Index n = model.dimension();
  const int maxit = opts.maxit > 0 ? opts.maxit : 2 * static_cast<int>(n);

  SubproblemResult<Scalar> result;
  result.x = Vector<Scalar>::Zero(n);
  Scalar qhat = model.c;
  result.path_q.push_back(qhat);
  result.path_norm.push_back(Scalar(0));
  if (opts.record_iterates) result.iterates.push_back(result.x);

  Vector<Scalar> g = -model.b;
  const Scalar g0_norm = g.norm();
  const Scalar tol = detail::inner_tolerance(g0_norm, opts.rtol);
  if (g0_norm == Scalar(0)) {
    result.status = SubproblemStatus::interior_converged;
    return result;
  }

  Vector<Scalar> d = -g;
  Scalar rho = g.squaredNorm();

  auto exit_along = [&](const Vector<Scalar>& dir, Scalar gd, Scalar curv, bool npc) {
    const Scalar tau = boundary_tau(result.x, dir, delta);
    result.x += tau * dir;
    qhat += tau * gd + Scalar(0.5) * tau * tau * curv;
    result.path_q.push_back(qhat);
    result.path_norm.push_back(result.x.norm());
    if (opts.record_iterates) result.iterates.push_back(result.x);
    result.status = npc ? SubproblemStatus::nonpositive_curvature_boundary
                        : SubproblemStatus::boundary;
  };

  for (int k = 0; k < maxit; ++k) {
    const Vector<Scalar> Ad = model.A(d);
    ++result.hessian_products;
    const Scalar curv = d.dot(Ad);
    const Scalar gd = g.dot(d);
    result.iterations = k + 1;
    if (curv <= Scalar(0)) {
      exit_along(d, gd, curv, true);
      result.model_decrease = model.c - qhat;
      return result;
    }
    const Scalar alpha = rho / curv;
    const Scalar tau = boundary_tau(result.x, d, delta);
    if (alpha > tau) {
      exit_along(d, gd, curv, false);
      result.model_decrease = model.c - qhat;
      return result;
    }
    result.x += alpha * d;
    g += alpha * Ad;
    qhat += alpha * gd + Scalar(0.5) * alpha * alpha * curv;
    result.path_q.push_back(qhat);
    result.path_norm.push_back(result.x.norm());
    if (opts.record_iterates) result.iterates.push_back(result.x);

    const Scalar rho_next = g.squaredNorm();
    if (std::sqrt(rho_next) <= tol) {
      result.status = SubproblemStatus::interior_converged;
      result.model_decrease = model.c - qhat;
      return result;
    }
    d = -g + (rho_next / rho) * d;
    rho = rho_next;
  }
  result.status = SubproblemStatus::max_iterations;
  result.model_decrease = model.c - qhat;
  return result;
}

/// Truncated LBFGS(m) from x_0 = 0 with H_0 = I. Nonpositive curvature or a
/// boundary crossing sends the step to the boundary along the current
/// direction; a rejected curvature pair is treated as nonpositive curvature.
template <typename Scalar>
SubproblemResult<Scalar> tr_lbfgs(const QuadraticModel<Scalar>& model, Scalar delta, int m,
                                  const SubproblemOptions<Scalar>& opts = {}) {
  const Index n = model.dimension();
  const int maxit = opts.maxit > 0 ? opts.maxit : 2 * static_cast<int>(n);

  SubproblemResult<Scalar> result;
  result.x = Vector<Scalar>::Zero(n);
  Scalar qhat = model.c;
  result.path_q.push_back(qhat);
  result.path_norm.push_back(Scalar(0));
  if (opts.record_iterates) result.iterates.push_back(result.x);

  Vector<Scalar> g = -model.b;
  const Scalar g0_norm = g.norm();
  const Scalar tol = detail::inner_tolerance(g0_norm, opts.rtol);
  if (g0_norm == Scalar(0)) {
    result.status = SubproblemStatus::interior_converged;
    return result;
  }

  LbfgsMemory<Scalar> mem = LbfgsMemory<Scalar>::identity_base(n, m);

  auto exit_along = [&](const Vector<Scalar>& dir, Scalar gd, Scalar curv, bool npc) {
    const Scalar tau = boundary_tau(result.x, dir, delta);
    result.x += tau * dir;
    qhat += tau * gd + Scalar(0.5) * tau * tau * curv;
    result.path_q.push_back(qhat);
    result.path_norm.push_back(result.x.norm());
    if (opts.record_iterates) result.iterates.push_back(result.x);
    result.status = npc ? SubproblemStatus::nonpositive_curvature_boundary
                        : SubproblemStatus::boundary;
  };

  for (int k = 0; k < maxit; ++k) {
    const Vector<Scalar> d = (-mem.apply(g)).eval();
    const Vector<Scalar> Ad = model.A(d);
    ++result.hessian_products;
    const Scalar curv = d.dot(Ad);
    const Scalar gd = g.dot(d);
    result.iterations = k + 1;
    if (curv <= Scalar(0)) {
      exit_along(d, gd, curv, true);
      result.model_decrease = model.c - qhat;
      return result;
    }
    const Scalar alpha = -gd / curv;
    const Scalar tau = boundary_tau(result.x, d, delta);
    if (alpha > tau) {
      exit_along(d, gd, curv, false);
      result.model_decrease = model.c - qhat;
      return result;
    }
    const Vector<Scalar> s = alpha * d;
    const Vector<Scalar> y = alpha * Ad;
    try {
      mem.push(s, y);
    } catch (const BreakdownError&) {
      // s'y ~ 0 certifies vanishing curvature along d on a quadratic
      exit_along(d, gd, curv, true);
      result.model_decrease = model.c - qhat;
      return result;
    }
    result.x += s;
    g += y;
    qhat += alpha * gd + Scalar(0.5) * alpha * alpha * curv;
    result.path_q.push_back(qhat);
    result.path_norm.push_back(result.x.norm());
    if (opts.record_iterates) result.iterates.push_back(result.x);
    if (g.norm() <= tol) {
      result.status = SubproblemStatus::interior_converged;
      result.model_decrease = model.c - qhat;
      return result;
    }
  }
  result.status = SubproblemStatus::max_iterations;
  result.model_decrease = model.c - qhat;
  return result;
}

/// Truncated DIOM(m) from x_0 = 0. Nonpositive curvature surfaces as a
/// nonpositive pivot u_{k,k}; the unnormalized direction
/// d_k = zeta_k (v_k - sum u_{i,k} p_i) avoids dividing by the pivot before
/// its sign is known.
template <typename Scalar>
SubproblemResult<Scalar> tr_diom(const QuadraticModel<Scalar>& model, Scalar delta, int m,
                                 const SubproblemOptions<Scalar>& opts = {}) {
  if (m < 1) throw std::invalid_argument("tr_diom: window must be >= 1");
  const Index n = model.dimension();
  const int maxit = opts.maxit > 0 ? opts.maxit : 2 * static_cast<int>(n);

  SubproblemResult<Scalar> result;
  result.x = Vector<Scalar>::Zero(n);
  result.path_q.push_back(model.c);
  result.path_norm.push_back(Scalar(0));
  if (opts.record_iterates) result.iterates.push_back(result.x);

  const Scalar beta = model.b.norm();
  const Scalar tol = detail::inner_tolerance(beta, opts.rtol);
  if (beta == Scalar(0)) {
    result.status = SubproblemStatus::interior_converged;
    return result;
  }

  ArnoldiBasis<Scalar> basis(m, model.b / beta);
  detail::VecWindow<Scalar> p_window(m);
  std::vector<Scalar> ell;

  Vector<Scalar> r = model.b;  // residual b - A x at the current iterate
  Scalar zeta = beta;

  auto finish = [&](SubproblemStatus status) {
    result.status = status;
    const Vector<Scalar> Ax = model.A(result.x);
    ++result.hessian_products;
    const Scalar q_final =
        Scalar(0.5) * result.x.dot(Ax) - model.b.dot(result.x) + model.c;
    result.path_q.push_back(q_final);
    result.path_norm.push_back(result.x.norm());
    if (opts.record_iterates) result.iterates.push_back(result.x);
    result.model_decrease = model.c - q_final;
  };

  for (int k = 1; k <= maxit; ++k) {
    const Vector<Scalar> vk = basis.v(k);  // the push below may evict v_k when m = 1
    const auto step = arnoldi_step(model.A, basis, k);
    ++result.hessian_products;
    const int mk = step.first;

    Scalar u_prev = Scalar(0);
    std::vector<Scalar> u(static_cast<std::size_t>(k - mk + 1));
    for (int i = mk; i <= k; ++i) {
      Scalar ui = step.t_at(i);
      if (i > 1) ui -= ell[static_cast<std::size_t>(i - 2)] * u_prev;
      u[static_cast<std::size_t>(i - mk)] = ui;
      u_prev = ui;
    }
    const Scalar ukk = u.back();

    Vector<Scalar> dvec = vk;
    for (int i = mk; i <= k - 1; ++i) dvec -= u[static_cast<std::size_t>(i - mk)] * p_window.at(i);
    dvec *= zeta;

    result.iterations = k;
    const Scalar tau = boundary_tau(result.x, dvec, delta);
    if (ukk <= Scalar(0) || Scalar(1) / ukk > tau) {
      result.x += tau * dvec;
      finish(ukk <= Scalar(0) ? SubproblemStatus::nonpositive_curvature_boundary
                              : SubproblemStatus::boundary);
      return result;
    }

    result.x += dvec / ukk;
    p_window.push(dvec / (zeta * ukk));

    const Scalar ell_next = step.t_next / ukk;
    ell.push_back(ell_next);

    // residual b - A x_k from the Hessenberg recurrence
    r = step.happy_breakdown ? Vector<Scalar>::Zero(n).eval()
                             : ((-step.t_next * zeta / ukk) * step.v_next).eval();
    result.path_q.push_back(-Scalar(0.5) * result.x.dot(model.b + r) + model.c);
    result.path_norm.push_back(result.x.norm());
    if (opts.record_iterates) result.iterates.push_back(result.x);

    if (r.norm() <= tol || step.happy_breakdown) {
      // drop the formula-based row in favor of a directly evaluated exit row
      result.path_q.pop_back();
      result.path_norm.pop_back();
      if (opts.record_iterates) result.iterates.pop_back();
      finish(SubproblemStatus::interior_converged);
      return result;
    }
    zeta = -ell_next * zeta;
  }
  finish(SubproblemStatus::max_iterations);
  return result;
}

// --- outer Newton trust-region loop ------------------------------------------

enum class TrSubsolver { tcg, lbfgs, diom };

inline std::string_view to_string(TrSubsolver s) {
  switch (s) {
    case TrSubsolver::tcg: return "tcg";
    case TrSubsolver::lbfgs: return "lbfgs";
    case TrSubsolver::diom: return "diom";
  }
  return "unknown";
}

template <typename Scalar>
struct TrustRegionConfig {
  Scalar delta0 = Scalar(1);
  Scalar eta1 = Scalar(0.25);
  Scalar eta2 = Scalar(0.75);
  Scalar grad_tol = Scalar(1e-5);
  int max_outer = 500;
  int memory = 5;      // window for the lbfgs/diom subsolvers
  int inner_maxit = 0;  // <= 0 means 2n

  void validate() const {
    if (delta0 <= Scalar(0)) throw std::invalid_argument("TrustRegionConfig: delta0 <= 0");
    if (!(Scalar(0) < eta1 && eta1 < eta2 && eta2 < Scalar(1)))
      throw std::invalid_argument("TrustRegionConfig: need 0 < eta1 < eta2 < 1");
    if (grad_tol <= Scalar(0)) throw std::invalid_argument("TrustRegionConfig: grad_tol <= 0");
    if (memory < 1) throw std::invalid_argument("TrustRegionConfig: memory < 1");
  }
};

enum class TrStatus { converged, max_iterations, radius_underflow, stagnation };

inline std::string_view to_string(TrStatus s) {
  switch (s) {
    case TrStatus::converged: return "converged";
    case TrStatus::max_iterations: return "max_iterations";
    case TrStatus::radius_underflow: return "radius_underflow";
    case TrStatus::stagnation: return "stagnation";
  }
  return "unknown";
}

template <typename Scalar>
struct TrOuterRecord {
  int j = 0;
  Scalar f = Scalar(0);
  Scalar grad_norm = Scalar(0);
  Scalar delta = Scalar(0);
  Scalar rho = Scalar(0);
  bool accepted = false;
  int inner_iterations = 0;
  int inner_hessian_products = 0;
  SubproblemStatus inner_status = SubproblemStatus::max_iterations;
};

template <typename Scalar>
struct TrNewtonResult {
  Vector<Scalar> z;
  TrStatus status = TrStatus::max_iterations;
  int outer_iterations = 0;
  Scalar f = Scalar(0);
  Scalar grad_norm = Scalar(0);
  long obj_evals = 0;
  long grad_evals = 0;
  long hprod_evals = 0;
  std::vector<TrOuterRecord<Scalar>> log;
};

/// Newton trust-region driver: quadratic model from the supplied
/// Hessian-vector product, step from the selected truncated subsolver,
/// radius quartered on poor adequacy and doubled on very good adequacy.
template <typename Scalar>
TrNewtonResult<Scalar> tr_newton(
    const std::function<Scalar(const Vector<Scalar>&)>& f,
    const std::function<Vector<Scalar>(const Vector<Scalar>&)>& grad,
    const std::function<Vector<Scalar>(const Vector<Scalar>&, const Vector<Scalar>&)>& hvp,
    Vector<Scalar> z0, const TrustRegionConfig<Scalar>& config, TrSubsolver subsolver) {
  config.validate();
  const Index n = z0.size();

  TrNewtonResult<Scalar> result;
  result.z = std::move(z0);

  auto eval_f = [&](const Vector<Scalar>& z) {
    ++result.obj_evals;
    return f(z);
  };
  auto eval_grad = [&](const Vector<Scalar>& z) {
    ++result.grad_evals;
    return grad(z);
  };

  Scalar fz = eval_f(result.z);
  Vector<Scalar> gz = eval_grad(result.z);
  Scalar delta = config.delta0;

  for (int j = 0; j < config.max_outer; ++j) {
    result.f = fz;
    result.grad_norm = gz.norm();
    if (result.grad_norm <= config.grad_tol) {
      result.status = TrStatus::converged;
      result.outer_iterations = j;
      return result;
    }
    if (delta < Scalar(1e-15)) {
      result.status = TrStatus::radius_underflow;
      result.outer_iterations = j;
      return result;
    }

    // quadratic model about z_j; products with the Hessian are counted
    const Vector<Scalar> z_fixed = result.z;
    SymmetricOperator<Scalar> Aj(n, [&hvp, &result, z_fixed](const Vector<Scalar>& v) {
      ++result.hprod_evals;
      return hvp(z_fixed, v);
    });
    const QuadraticModel<Scalar> model(Aj, -gz, Scalar(0));

    SubproblemOptions<Scalar> sopts;
    sopts.rtol = std::min(Scalar(0.1), std::sqrt(result.grad_norm));
    sopts.maxit = config.inner_maxit;

    SubproblemResult<Scalar> sub;
    switch (subsolver) {
      case TrSubsolver::tcg: sub = steihaug_tcg(model, delta, sopts); break;
      case TrSubsolver::lbfgs: sub = tr_lbfgs(model, delta, config.memory, sopts); break;
      case TrSubsolver::diom: sub = tr_diom(model, delta, config.memory, sopts); break;
    }

    TrOuterRecord<Scalar> rec;
    rec.j = j;
    rec.f = fz;
    rec.grad_norm = result.grad_norm;
    rec.delta = delta;
    rec.inner_iterations = sub.iterations;
    rec.inner_hessian_products = sub.hessian_products;
    rec.inner_status = sub.status;

    if (!(sub.model_decrease > Scalar(0))) {
      result.log.push_back(rec);
      result.status = TrStatus::stagnation;
      result.outer_iterations = j + 1;
      return result;
    }

    const Scalar f_trial = eval_f(result.z + sub.x);
    const Scalar rho = (fz - f_trial) / sub.model_decrease;
    rec.rho = rho;

    // a non-finite trial value counts as poor adequacy
    const bool acceptable = std::isfinite(rho) && rho >= config.eta1;
    if (!acceptable)
      delta /= Scalar(4);
    else if (rho >= config.eta2)
      delta *= Scalar(2);

    if (acceptable) {
      rec.accepted = true;
      result.z += sub.x;
      fz = f_trial;
      gz = eval_grad(result.z);
    }
    result.log.push_back(rec);
  }
  result.f = fz;
  result.grad_norm = gz.norm();
  result.status = TrStatus::max_iterations;
  result.outer_iterations = config.max_outer;
  return result;
}

}  // namespace qnk
