#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

namespace qnk {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Non-deduced vector parameter: lets callers pass Eigen expressions to
/// entry points whose Scalar is fixed by another argument.
template <typename Scalar>
using VectorArg = std::type_identity_t<Vector<Scalar>>;

using Index = Eigen::Index;

/// Threshold under which curvature-like denominators are treated as zero.
template <typename Scalar>
Scalar curvature_epsilon() {
  return std::sqrt(std::numeric_limits<Scalar>::epsilon());
}

enum class BreakdownKind {
  zero_curvature,    // |d'Ad| ~ 0 in a line search
  curvature_pair,    // s'y ~ 0 in a secant update
  denominator,       // y'Hy ~ 0 in a Broyden update
  sr1_denominator,   // (s - Hy)'y ~ 0
  singular_update,   // phi == phi_c would make the update singular
  singular_system,   // singular projected system / zero LU pivot
};

class BreakdownError : public std::runtime_error {
 public:
  BreakdownError(BreakdownKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  BreakdownKind kind() const { return kind_; }

 private:
  BreakdownKind kind_;
};

/// Symmetric linear operator v -> A*v given by its action only.
/// Immutable after construction; cheap to copy (the action is shared).
template <typename Scalar>
class SymmetricOperator {
 public:
  using Apply = std::function<Vector<Scalar>(const Vector<Scalar>&)>;

  SymmetricOperator() = default;

  SymmetricOperator(Index n, Apply apply) : n_(n), apply_(std::move(apply)) {
    if (n_ <= 0) throw std::invalid_argument("SymmetricOperator: dimension must be positive");
    if (!apply_) throw std::invalid_argument("SymmetricOperator: empty action");
  }

  Index dimension() const { return n_; }

  Vector<Scalar> operator()(const Vector<Scalar>& v) const {
    if (v.size() != n_) throw std::invalid_argument("SymmetricOperator: dimension mismatch");
    return apply_(v);
  }

 private:
  Index n_ = 0;
  Apply apply_;
};

template <typename Scalar>
SymmetricOperator<Scalar> operator_from_dense(Matrix<Scalar> A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("operator_from_dense: matrix not square");
  auto stored = std::make_shared<Matrix<Scalar>>(std::move(A));
  return SymmetricOperator<Scalar>(stored->rows(), [stored](const Vector<Scalar>& v) -> Vector<Scalar> {
    return (*stored) * v;
  });
}

template <typename Scalar>
SymmetricOperator<Scalar> identity_operator(Index n) {
  return SymmetricOperator<Scalar>(n, [](const Vector<Scalar>& v) { return v; });
}

/// Fixed SPD operator H0 used both as a PCG preconditioner and as the
/// initial matrix of quasi-Newton methods. The identity is flagged so
/// callers can skip the application entirely.
template <typename Scalar>
class Preconditioner {
 public:
  using Apply = std::function<Vector<Scalar>(const Vector<Scalar>&)>;

  static Preconditioner identity(Index n) { return Preconditioner(n); }

  Preconditioner(Index n, Apply apply) : n_(n), apply_(std::move(apply)), is_identity_(false) {
    if (n_ <= 0) throw std::invalid_argument("Preconditioner: dimension must be positive");
    if (!apply_) throw std::invalid_argument("Preconditioner: empty action");
  }

  Index dimension() const { return n_; }
  bool is_identity() const { return is_identity_; }

  Vector<Scalar> operator()(const Vector<Scalar>& v) const {
    if (v.size() != n_) throw std::invalid_argument("Preconditioner: dimension mismatch");
    return is_identity_ ? v : apply_(v);
  }

 private:
  explicit Preconditioner(Index n) : n_(n), is_identity_(true) {
    if (n_ <= 0) throw std::invalid_argument("Preconditioner: dimension must be positive");
  }

  Index n_ = 0;
  Apply apply_;
  bool is_identity_ = true;
};

template <typename Scalar>
Preconditioner<Scalar> preconditioner_from_dense(Matrix<Scalar> H0) {
  if (H0.rows() != H0.cols()) throw std::invalid_argument("preconditioner_from_dense: not square");
  auto stored = std::make_shared<Matrix<Scalar>>(std::move(H0));
  return Preconditioner<Scalar>(stored->rows(), [stored](const Vector<Scalar>& v) -> Vector<Scalar> {
    return (*stored) * v;
  });
}

/// Strictly convex (when A is SPD) quadratic q(x) = x'Ax/2 - b'x + c.
template <typename Scalar>
struct QuadraticModel {
  SymmetricOperator<Scalar> A;
  Vector<Scalar> b;
  Scalar c = Scalar(0);

  QuadraticModel(SymmetricOperator<Scalar> A_, Vector<Scalar> b_, Scalar c_ = Scalar(0))
      : A(std::move(A_)), b(std::move(b_)), c(c_) {
    if (b.size() != A.dimension())
      throw std::invalid_argument("QuadraticModel: linear term dimension mismatch");
  }

  Index dimension() const { return A.dimension(); }
};

template <typename Scalar>
Scalar q_value(const QuadraticModel<Scalar>& model, const VectorArg<Scalar>& x) {
  const Vector<Scalar> Ax = model.A(x);  // single operator application
  return Scalar(0.5) * x.dot(Ax) - model.b.dot(x) + model.c;
}

template <typename Scalar>
Vector<Scalar> q_gradient(const QuadraticModel<Scalar>& model, const VectorArg<Scalar>& x) {
  return model.A(x) - model.b;
}

/// Step length alpha = -g'd / d'Ad, the stationary point of
/// alpha -> q(x + alpha d). Throws on vanishing curvature.
template <typename Scalar>
Scalar exact_linesearch(const QuadraticModel<Scalar>& model, const VectorArg<Scalar>& g,
                        const VectorArg<Scalar>& d) {
  const Scalar curv = d.dot(model.A(d));
  const Scalar dd = d.squaredNorm();
  if (std::abs(curv) <= curvature_epsilon<Scalar>() * dd)
    throw BreakdownError(BreakdownKind::zero_curvature, "exact_linesearch: d'Ad ~ 0");
  return -g.dot(d) / curv;
}

enum class SolveStatus {
  converged,
  max_iterations,
  nonpositive_curvature,
  boundary,
  breakdown,
};

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::nonpositive_curvature: return "nonpositive_curvature";
    case SolveStatus::boundary: return "boundary";
    case SolveStatus::breakdown: return "breakdown";
  }
  return "unknown";
}

inline std::optional<SolveStatus> solve_status_from_string(std::string_view s) {
  for (auto v : {SolveStatus::converged, SolveStatus::max_iterations,
                 SolveStatus::nonpositive_curvature, SolveStatus::boundary,
                 SolveStatus::breakdown})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

/// One row of a per-iteration solve record. Quantities a method does not
/// produce stay absent (exporters serialize them as nulls).
template <typename Scalar>
struct TraceRecord {
  int k = 0;
  Scalar res_norm = Scalar(0);
  Scalar rel_res = Scalar(0);
  Scalar q = Scalar(0);
  std::optional<Scalar> alpha;
  std::optional<Scalar> curvature;
  std::optional<Scalar> gamma;
  std::optional<Scalar> u_kk;
  std::optional<Scalar> zeta;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

template <typename Scalar>
class SolveTrace {
 public:
  void append(TraceRecord<Scalar> rec) {
    if (!records_.empty() && rec.k <= records_.back().k)
      throw std::invalid_argument("SolveTrace: iteration indices must strictly increase");
    records_.push_back(std::move(rec));
  }

  TraceRecord<Scalar>& back() { return records_.back(); }
  const std::vector<TraceRecord<Scalar>>& records() const { return records_; }
  std::size_t rows() const { return records_.size(); }

  void finalize(SolveStatus status) {
    if (finalized_) throw std::logic_error("SolveTrace: status already set");
    status_ = status;
    finalized_ = true;
  }

  bool finalized() const { return finalized_; }
  SolveStatus status() const { return status_; }

 private:
  std::vector<TraceRecord<Scalar>> records_;
  SolveStatus status_ = SolveStatus::max_iterations;
  bool finalized_ = false;
};

// --- sampled operator checks -------------------------------------------

template <typename Scalar>
Vector<Scalar> random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector<Scalar> v(n);
  for (Index i = 0; i < n; ++i) v[i] = Scalar(dist(rng));
  return v;
}

/// Sampled linearity check: apply(u + v) == apply(u) + apply(v).
template <typename Scalar>
bool is_linear(const SymmetricOperator<Scalar>& A, int samples = 4, unsigned seed = 0,
               Scalar rtol = Scalar(1e-12)) {
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Vector<Scalar> u = random_vector<Scalar>(A.dimension(), rng);
    const Vector<Scalar> v = random_vector<Scalar>(A.dimension(), rng);
    const Vector<Scalar> lhs = A(u + v);
    const Vector<Scalar> rhs = A(u) + A(v);
    const Scalar scale = std::max(lhs.norm(), rhs.norm());
    if ((lhs - rhs).norm() > rtol * std::max(scale, Scalar(1))) return false;
  }
  return true;
}

/// Sampled symmetry check: u'Av == v'Au.
template <typename Scalar>
bool is_symmetric(const SymmetricOperator<Scalar>& A, int samples = 4, unsigned seed = 0,
                  Scalar rtol = Scalar(1e-10)) {
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Vector<Scalar> u = random_vector<Scalar>(A.dimension(), rng);
    const Vector<Scalar> v = random_vector<Scalar>(A.dimension(), rng);
    const Scalar uav = u.dot(A(v));
    const Scalar vau = v.dot(A(u));
    const Scalar scale = std::max({std::abs(uav), std::abs(vau), Scalar(1)});
    if (std::abs(uav - vau) > rtol * scale) return false;
  }
  return true;
}

/// Sampled positive-definiteness of a preconditioner: v'H0v > 0.
template <typename Scalar>
bool is_spd_sampled(const Preconditioner<Scalar>& H0, int samples = 4, unsigned seed = 0) {
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Vector<Scalar> v = random_vector<Scalar>(H0.dimension(), rng);
    if (v.dot(H0(v)) <= Scalar(0)) return false;
  }
  return true;
}

}  // namespace qnk
