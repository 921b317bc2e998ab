#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "qnk/core.hpp"

namespace qnk {

/// Windowed (s, y) storage for LBFGS(m) with cached rho = 1/s'y and the
/// fixed base operator H0. Circular buffer; no reallocation per iteration.
template <typename Scalar>
class LbfgsMemory {
 public:
  LbfgsMemory(Index n, int m, Preconditioner<Scalar> base)
      : n_(n), m_(m), base_(std::move(base)), slots_(static_cast<std::size_t>(m)) {
    if (m_ < 1) throw std::invalid_argument("LbfgsMemory: memory must be >= 1");
    if (base_.dimension() != n_) throw std::invalid_argument("LbfgsMemory: base dimension mismatch");
  }

  static LbfgsMemory identity_base(Index n, int m) {
    return LbfgsMemory(n, m, Preconditioner<Scalar>::identity(n));
  }

  int memory() const { return m_; }
  int size() const { return size_; }
  Index dimension() const { return n_; }

  /// Number of window vectors held (2 per pair), as counted in the
  /// storage comparison against CG and LSR1.
  int stored_vector_count() const { return 2 * size_; }

  /// Scalar multiplications spent in apply/push so far (base application
  /// excluded; the canonical count assumes H0 = I).
  std::size_t multiplications() const { return mults_; }

  void push(const Vector<Scalar>& s, const Vector<Scalar>& y) {
    const Scalar sy = s.dot(y);
    mults_ += static_cast<std::size_t>(n_);
    if (std::abs(sy) <= curvature_epsilon<Scalar>() * s.norm() * y.norm())
      throw BreakdownError(BreakdownKind::curvature_pair, "lbfgs_push: s'y ~ 0");
    Pair& target = slots_[static_cast<std::size_t>((head_ + size_) % m_)];
    if (size_ == m_)  // the slot past the newest is the oldest: overwrite it
      head_ = (head_ + 1) % m_;
    else
      ++size_;
    target.s = s;
    target.y = y;
    target.rho = Scalar(1) / sy;
  }

  /// Two-loop recursion computing H_k^m v. Empty window degenerates to the
  /// base application. Cost 4mn multiplications beyond the base.
  Vector<Scalar> apply(const Vector<Scalar>& v) const {
    if (v.size() != n_) throw std::invalid_argument("lbfgs_apply: dimension mismatch");
    Vector<Scalar> q = v;
    std::vector<Scalar> a(static_cast<std::size_t>(size_));
    for (int j = size_ - 1; j >= 0; --j) {  // newest to oldest
      const Pair& p = slot(j);
      const Scalar aj = p.rho * p.s.dot(q);
      q -= aj * p.y;
      a[static_cast<std::size_t>(j)] = aj;
    }
    Vector<Scalar> r = base_(q);
    for (int j = 0; j < size_; ++j) {  // oldest to newest
      const Pair& p = slot(j);
      const Scalar bj = p.rho * p.y.dot(r);
      r += (a[static_cast<std::size_t>(j)] - bj) * p.s;
    }
    mults_ += static_cast<std::size_t>(4 * size_) * static_cast<std::size_t>(n_);
    return r;
  }

 private:
  struct Pair {
    Vector<Scalar> s, y;
    Scalar rho = Scalar(0);
  };

  // j = 0 is the oldest stored pair
  const Pair& slot(int j) const { return slots_[static_cast<std::size_t>((head_ + j) % m_)]; }

  Index n_;
  int m_;
  Preconditioner<Scalar> base_;
  std::vector<Pair> slots_;
  int head_ = 0;
  int size_ = 0;
  mutable std::size_t mults_ = 0;
};

template <typename Scalar>
Vector<Scalar> lbfgs_apply(const LbfgsMemory<Scalar>& mem, const Vector<Scalar>& v) {
  return mem.apply(v);
}

template <typename Scalar>
void lbfgs_push(LbfgsMemory<Scalar>& mem, const Vector<Scalar>& s, const Vector<Scalar>& y) {
  mem.push(s, y);
}

/// Windowed z-vector storage for LSR1(m):
///   H_{k+1}^m = H0 + sum_i z_i z_i' / delta_i,  z_i = s_i - H_i^m y_i,
/// where H_i^m is the operator at insertion time. delta_i = z_i'y_i so each
/// stored term preserves the secant equation H y_i = s_i at insertion
/// (matches the dense SR1 update while nothing has been evicted).
template <typename Scalar>
class Lsr1Memory {
 public:
  Lsr1Memory(Index n, int m, Preconditioner<Scalar> base)
      : n_(n), m_(m), base_(std::move(base)), slots_(static_cast<std::size_t>(m)) {
    if (m_ < 1) throw std::invalid_argument("Lsr1Memory: memory must be >= 1");
    if (base_.dimension() != n_) throw std::invalid_argument("Lsr1Memory: base dimension mismatch");
  }

  static Lsr1Memory identity_base(Index n, int m) {
    return Lsr1Memory(n, m, Preconditioner<Scalar>::identity(n));
  }

  int memory() const { return m_; }
  int size() const { return size_; }
  Index dimension() const { return n_; }
  int stored_vector_count() const { return size_; }
  std::size_t multiplications() const { return mults_; }
  int skips() const { return skips_; }

  /// Inserts z = s - H y computed with the current operator. Throws (and
  /// counts a skip) when the SR1 denominator z'y is negligible.
  void push(const Vector<Scalar>& s, const Vector<Scalar>& y) {
    const Vector<Scalar> z = s - apply(y);
    const Scalar delta = z.dot(y);
    mults_ += static_cast<std::size_t>(n_);
    if (std::abs(delta) <= curvature_epsilon<Scalar>() * z.norm() * y.norm()) {
      ++skips_;
      throw BreakdownError(BreakdownKind::sr1_denominator, "lsr1_push: (s - Hy)'y ~ 0");
    }
    Term& target = slots_[static_cast<std::size_t>((head_ + size_) % m_)];
    if (size_ == m_)
      head_ = (head_ + 1) % m_;
    else
      ++size_;
    target.z = z;
    target.delta = delta;
  }

  /// v -> H0 v + sum_i (z_i'v / delta_i) z_i. Cost 2mn multiplications.
  Vector<Scalar> apply(const Vector<Scalar>& v) const {
    if (v.size() != n_) throw std::invalid_argument("lsr1_apply: dimension mismatch");
    Vector<Scalar> r = base_(v);
    for (int j = 0; j < size_; ++j) {
      const Term& t = slots_[static_cast<std::size_t>((head_ + j) % m_)];
      r += (t.z.dot(v) / t.delta) * t.z;
    }
    mults_ += static_cast<std::size_t>(2 * size_) * static_cast<std::size_t>(n_);
    return r;
  }

 private:
  struct Term {
    Vector<Scalar> z;
    Scalar delta = Scalar(0);
  };

  Index n_;
  int m_;
  Preconditioner<Scalar> base_;
  std::vector<Term> slots_;
  int head_ = 0;
  int size_ = 0;
  int skips_ = 0;
  mutable std::size_t mults_ = 0;
};

template <typename Scalar>
Vector<Scalar> lsr1_apply(const Lsr1Memory<Scalar>& mem, const Vector<Scalar>& v) {
  return mem.apply(v);
}

template <typename Scalar>
void lsr1_push(Lsr1Memory<Scalar>& mem, const Vector<Scalar>& s, const Vector<Scalar>& y) {
  mem.push(s, y);
}

// --- limited-memory solvers ---------------------------------------------------

template <typename Scalar>
struct LimitedMemoryOptions {
  Scalar rtol = Scalar(1e-10);
  Scalar atol = Scalar(0);
  int maxit = 0;  // <= 0 means 10 * n
  bool record_history = false;
};

template <typename Scalar>
struct LimitedMemoryResult {
  Vector<Scalar> x;
  SolveTrace<Scalar> trace;
  int sr1_skips = 0;
  std::vector<Vector<Scalar>> iterates;
  std::vector<Vector<Scalar>> directions;
};

namespace detail {

template <typename Scalar, typename Memory, typename PushFn>
LimitedMemoryResult<Scalar> limited_memory_solve(const SymmetricOperator<Scalar>& A,
                                                 const Vector<Scalar>& b,
                                                 const Vector<Scalar>& x0, Memory& mem,
                                                 PushFn&& push_pair,
                                                 const LimitedMemoryOptions<Scalar>& opts) {
  const int maxit = opts.maxit > 0 ? opts.maxit : 10 * static_cast<int>(A.dimension());
  const Scalar bnorm = b.norm();
  const Scalar tol = std::max(opts.atol, opts.rtol * bnorm);

  LimitedMemoryResult<Scalar> result;
  Vector<Scalar> x = x0;
  Vector<Scalar> Ax = A(x);
  Vector<Scalar> g = Ax - b;
  Scalar q = Scalar(0.5) * x.dot(Ax) - b.dot(x);

  auto record = [&](int k) {
    TraceRecord<Scalar> rec;
    rec.k = k;
    rec.res_norm = g.norm();
    rec.rel_res = bnorm > Scalar(0) ? rec.res_norm / bnorm : rec.res_norm;
    rec.q = q;
    result.trace.append(rec);
    if (opts.record_history) result.iterates.push_back(x);
  };

  record(0);
  if (g.norm() <= tol) {
    result.trace.finalize(SolveStatus::converged);
    result.x = x;
    return result;
  }

  for (int k = 0; k < maxit; ++k) {
    const Vector<Scalar> d = (-mem.apply(g)).eval();
    if (opts.record_history) result.directions.push_back(d);
    const Vector<Scalar> Ad = A(d);
    const Scalar curv = d.dot(Ad);
    result.trace.back().curvature = curv;
    if (curv <= Scalar(0)) {
      result.trace.finalize(SolveStatus::nonpositive_curvature);
      result.x = x;
      return result;
    }
    const Scalar gd = g.dot(d);
    const Scalar alpha = -gd / curv;
    result.trace.back().alpha = alpha;

    const Vector<Scalar> s = alpha * d;
    const Vector<Scalar> y = alpha * Ad;
    x += s;
    g += y;
    q += alpha * gd + Scalar(0.5) * alpha * alpha * curv;

    if (!push_pair(mem, s, y, result)) {
      record(k + 1);
      result.trace.finalize(SolveStatus::breakdown);
      result.x = x;
      return result;
    }

    record(k + 1);
    if (g.norm() <= tol) {
      result.trace.finalize(SolveStatus::converged);
      result.x = x;
      return result;
    }
  }
  result.trace.finalize(SolveStatus::max_iterations);
  result.x = x;
  return result;
}

}  // namespace detail

template <typename Scalar>
LimitedMemoryResult<Scalar> lbfgs_solve(const SymmetricOperator<Scalar>& A,
                                        const VectorArg<Scalar>& b,
                                        const Preconditioner<Scalar>& H0,
                                        const VectorArg<Scalar>& x0, int m,
                                        const LimitedMemoryOptions<Scalar>& opts) {
  LbfgsMemory<Scalar> mem(A.dimension(), m, H0);
  return detail::limited_memory_solve<Scalar>(
      A, b, x0, mem,
      [](LbfgsMemory<Scalar>& mm, const Vector<Scalar>& s, const Vector<Scalar>& y,
         LimitedMemoryResult<Scalar>&) {
        try {
          mm.push(s, y);
          return true;
        } catch (const BreakdownError&) {
          return false;  // abort the solve
        }
      },
      opts);
}

/// LSR1(m): skip-on-breakdown, the solve continues with the unmodified
/// operator and the skip count is reported.
template <typename Scalar>
LimitedMemoryResult<Scalar> lsr1_solve(const SymmetricOperator<Scalar>& A,
                                       const VectorArg<Scalar>& b,
                                       const Preconditioner<Scalar>& H0,
                                       const VectorArg<Scalar>& x0, int m,
                                       const LimitedMemoryOptions<Scalar>& opts) {
  Lsr1Memory<Scalar> mem(A.dimension(), m, H0);
  auto result = detail::limited_memory_solve<Scalar>(
      A, b, x0, mem,
      [](Lsr1Memory<Scalar>& mm, const Vector<Scalar>& s, const Vector<Scalar>& y,
         LimitedMemoryResult<Scalar>& res) {
        try {
          mm.push(s, y);
        } catch (const BreakdownError&) {
          ++res.sr1_skips;
        }
        return true;
      },
      opts);
  return result;
}

}  // namespace qnk
