#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qnk/core.hpp"

namespace qnk {

// --- Lorenz-96 dynamics -------------------------------------------------------

/// Canonical cyclic Lorenz-96 right-hand side
///   dz_i/dt = (z_{i+1} - z_{i-2}) z_{i-1} - z_i + F,  indices mod n.
template <typename Scalar>
Vector<Scalar> lorenz96_rhs(const Vector<Scalar>& z, Scalar forcing) {
  const Index n = z.size();
  if (n < 4) throw std::invalid_argument("lorenz96_rhs: state dimension must be >= 4");
  Vector<Scalar> dz(n);
  for (Index i = 0; i < n; ++i) {
    const Index ip1 = (i + 1) % n;
    const Index im1 = (i + n - 1) % n;
    const Index im2 = (i + n - 2) % n;
    dz[i] = (z[ip1] - z[im2]) * z[im1] - z[i] + forcing;
  }
  return dz;
}

/// Classical fixed-step fourth-order Runge-Kutta integration of Lorenz-96.
template <typename Scalar>
Vector<Scalar> propagate(const Vector<Scalar>& z0, int steps, Scalar dt, Scalar forcing) {
  if (dt <= Scalar(0)) throw std::invalid_argument("propagate: dt must be positive");
  Vector<Scalar> z = z0;
  for (int s = 0; s < steps; ++s) {
    const Vector<Scalar> k1 = lorenz96_rhs(z, forcing);
    const Vector<Scalar> k2 = lorenz96_rhs((z + Scalar(0.5) * dt * k1).eval(), forcing);
    const Vector<Scalar> k3 = lorenz96_rhs((z + Scalar(0.5) * dt * k2).eval(), forcing);
    const Vector<Scalar> k4 = lorenz96_rhs((z + dt * k3).eval(), forcing);
    z += (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
    if (!z.allFinite()) throw std::runtime_error("propagate: state blew up");
  }
  return z;
}

// --- 4D-Var style data assimilation -------------------------------------------

template <typename Scalar>
struct AssimilationConfig {
  Index n = 40;
  Scalar sigma_b = Scalar(0.8);
  Scalar sigma_r = Scalar(0.2);
  Scalar forcing = Scalar(8);
  Scalar dt = Scalar(0.01);
  int n_obs_times = 2;
  int obs_dim = 20;
  int steps_between_obs = 10;
  int spinup_steps = 500;
  unsigned seed = 0;
  bool zero_observation_noise = false;
  Scalar fd_step = Scalar(1e-6);  // base step for gradient finite differences
};

/// Weighted least-squares objective
///   f(z0) = ||z0 - z_b||^2 / (2 sigma_b)
///         + sum_i ||y_i - H_i(M(z0))||^2 / (2 sigma_r^2)
/// with Lorenz-96 propagation and uniform index-selection observation
/// operators. Observations are synthesized from a seeded truth run.
template <typename Scalar>
class AssimilationProblem {
 public:
  static AssimilationProblem make(const AssimilationConfig<Scalar>& cfg) {
    if (cfg.obs_dim > cfg.n) throw std::invalid_argument("AssimilationProblem: m_i > n");
    if (cfg.sigma_b <= Scalar(0) || cfg.sigma_r <= Scalar(0))
      throw std::invalid_argument("AssimilationProblem: weights must be positive");

    AssimilationProblem p;
    p.cfg_ = cfg;

    // strictly increasing uniform selection indices
    p.obs_indices_.resize(static_cast<std::size_t>(cfg.obs_dim));
    for (int j = 0; j < cfg.obs_dim; ++j)
      p.obs_indices_[static_cast<std::size_t>(j)] =
          static_cast<Index>((static_cast<long>(j) * cfg.n) / cfg.obs_dim);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    // spun-up truth state on the attractor
    Vector<Scalar> truth = Vector<Scalar>::Constant(cfg.n, cfg.forcing);
    for (Index i = 0; i < cfg.n; ++i) truth[i] += Scalar(0.1) * Scalar(noise(rng));
    truth = propagate(truth, cfg.spinup_steps, cfg.dt, cfg.forcing);
    p.truth_ = truth;

    Vector<Scalar> state = truth;
    p.y_.reserve(static_cast<std::size_t>(cfg.n_obs_times));
    for (int t = 0; t < cfg.n_obs_times; ++t) {
      state = propagate(state, cfg.steps_between_obs, cfg.dt, cfg.forcing);
      Vector<Scalar> obs(cfg.obs_dim);
      for (int j = 0; j < cfg.obs_dim; ++j) {
        obs[j] = state[p.obs_indices_[static_cast<std::size_t>(j)]];
        if (!cfg.zero_observation_noise) obs[j] += cfg.sigma_r * Scalar(noise(rng));
      }
      p.y_.push_back(std::move(obs));
    }

    p.z_b_ = truth;
    for (Index i = 0; i < cfg.n; ++i) p.z_b_[i] += cfg.sigma_b * Scalar(noise(rng));
    return p;
  }

  Index dimension() const { return cfg_.n; }
  const Vector<Scalar>& background() const { return z_b_; }
  const Vector<Scalar>& truth() const { return truth_; }
  const AssimilationConfig<Scalar>& config() const { return cfg_; }

  Scalar objective(const Vector<Scalar>& z0) const {
    Scalar f = (z0 - z_b_).squaredNorm() / (Scalar(2) * cfg_.sigma_b);
    Vector<Scalar> state = z0;
    for (std::size_t t = 0; t < y_.size(); ++t) {
      state = propagate(state, cfg_.steps_between_obs, cfg_.dt, cfg_.forcing);
      Scalar misfit = Scalar(0);
      for (int j = 0; j < cfg_.obs_dim; ++j) {
        const Scalar r = y_[t][j] - state[obs_indices_[static_cast<std::size_t>(j)]];
        misfit += r * r;
      }
      f += misfit / (Scalar(2) * cfg_.sigma_r * cfg_.sigma_r);
    }
    return f;
  }

  /// Central finite-difference gradient, component-wise.
  Vector<Scalar> gradient(const Vector<Scalar>& z0) const {
    Vector<Scalar> g(cfg_.n);
    Vector<Scalar> zp = z0;
    for (Index i = 0; i < cfg_.n; ++i) {
      const Scalar h = cfg_.fd_step * (Scalar(1) + std::abs(z0[i]));
      zp[i] = z0[i] + h;
      const Scalar fp = objective(zp);
      zp[i] = z0[i] - h;
      const Scalar fm = objective(zp);
      zp[i] = z0[i];
      g[i] = (fp - fm) / (Scalar(2) * h);
    }
    return g;
  }

  /// Hessian-vector product by central differencing of the gradient.
  Vector<Scalar> hessian_vector(const Vector<Scalar>& z0, const Vector<Scalar>& v) const {
    const Scalar vnorm = v.norm();
    if (vnorm == Scalar(0)) return Vector<Scalar>::Zero(cfg_.n);
    const Scalar eps = Scalar(1e-4) * (Scalar(1) + z0.norm()) / vnorm;
    const Vector<Scalar> gp = gradient((z0 + eps * v).eval());
    const Vector<Scalar> gm = gradient((z0 - eps * v).eval());
    return (gp - gm) / (Scalar(2) * eps);
  }

 private:
  AssimilationConfig<Scalar> cfg_;
  Vector<Scalar> z_b_;
  Vector<Scalar> truth_;
  std::vector<Index> obs_indices_;
  std::vector<Vector<Scalar>> y_;
};

template <typename Scalar>
struct Fgh {
  Scalar f = Scalar(0);
  Vector<Scalar> grad;
  std::function<Vector<Scalar>(const Vector<Scalar>&)> hvp;  // valid at the evaluation point
};

template <typename Scalar>
Fgh<Scalar> assimilation_fgh(const AssimilationProblem<Scalar>& p, const Vector<Scalar>& z0) {
  Fgh<Scalar> out;
  out.f = p.objective(z0);
  out.grad = p.gradient(z0);
  const Vector<Scalar> z_fixed = z0;
  out.hvp = [&p, z_fixed](const Vector<Scalar>& v) { return p.hessian_vector(z_fixed, v); };
  return out;
}

// --- binary classification -----------------------------------------------------

/// f(z) = ||1 - tanh(b .* (A'z))||^2 / 2 with labels b in {-1, 1}.
template <typename Scalar>
struct ClassificationProblem {
  Matrix<Scalar> A;       // n x N, columns are samples
  Vector<Scalar> labels;  // length N, entries +-1

  ClassificationProblem(Matrix<Scalar> A_, Vector<Scalar> labels_)
      : A(std::move(A_)), labels(std::move(labels_)) {
    if (A.cols() != labels.size())
      throw std::invalid_argument("ClassificationProblem: sample/label count mismatch");
    for (Index i = 0; i < labels.size(); ++i)
      if (labels[i] != Scalar(1) && labels[i] != Scalar(-1))
        throw std::invalid_argument("ClassificationProblem: labels must be +-1");
  }

  Index features() const { return A.rows(); }
  Index samples() const { return A.cols(); }

  Scalar objective(const Vector<Scalar>& z) const {
    const Vector<Scalar> t = (labels.array() * (A.transpose() * z).array()).tanh();
    return Scalar(0.5) * (Scalar(1) - t.array()).matrix().squaredNorm();
  }

  Vector<Scalar> gradient(const Vector<Scalar>& z) const {
    const Vector<Scalar> t = (labels.array() * (A.transpose() * z).array()).tanh();
    const Vector<Scalar> w =
        (labels.array() * (Scalar(1) - t.array().square()) * (Scalar(1) - t.array())).matrix();
    return -(A * w);
  }

  /// Exact Hessian-vector product: A diag((1-t)(3t+1)(1-t^2)) A' v.
  Vector<Scalar> hessian_vector(const Vector<Scalar>& z, const Vector<Scalar>& v) const {
    const Vector<Scalar> t = (labels.array() * (A.transpose() * z).array()).tanh();
    const Eigen::Array<Scalar, Eigen::Dynamic, 1> w =
        (Scalar(1) - t.array()) * (Scalar(3) * t.array() + Scalar(1)) *
        (Scalar(1) - t.array().square());
    const Vector<Scalar> Av = A.transpose() * v;
    return A * (w * Av.array()).matrix();
  }
};

template <typename Scalar>
Fgh<Scalar> classification_fgh(const ClassificationProblem<Scalar>& p, const Vector<Scalar>& z) {
  Fgh<Scalar> out;
  out.f = p.objective(z);
  out.grad = p.gradient(z);
  const Vector<Scalar> z_fixed = z;
  out.hvp = [&p, z_fixed](const Vector<Scalar>& v) { return p.hessian_vector(z_fixed, v); };
  return out;
}

/// Two seeded Gaussian clusters shifted along a random direction.
template <typename Scalar>
ClassificationProblem<Scalar> make_synthetic_classification(Index n, Index N, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector<Scalar> mu(n);
  for (Index i = 0; i < n; ++i) mu[i] = Scalar(dist(rng));
  mu *= Scalar(0.5) / mu.norm() * std::sqrt(Scalar(n));

  Matrix<Scalar> A(n, N);
  Vector<Scalar> labels(N);
  for (Index j = 0; j < N; ++j) {
    const Scalar sign = (j % 2 == 0) ? Scalar(1) : Scalar(-1);
    labels[j] = sign;
    for (Index i = 0; i < n; ++i) A(i, j) = sign * mu[i] + Scalar(dist(rng));
  }
  return ClassificationProblem<Scalar>(std::move(A), std::move(labels));
}

// --- IDX (raw MNIST-style) loaders ----------------------------------------------

namespace detail {

inline std::uint32_t read_be32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw std::runtime_error("IDX: truncated header");
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace detail

/// Reads an IDX image file (magic 0x00000803) into an n x N matrix with
/// pixel values scaled to [0, 1]; n = rows * cols, one column per image.
inline Matrix<double> load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("IDX: cannot open " + path);
  if (detail::read_be32(in) != 0x00000803u)
    throw std::runtime_error("IDX: bad magic for image file " + path);
  const auto count = detail::read_be32(in);
  const auto rows = detail::read_be32(in);
  const auto cols = detail::read_be32(in);
  const Index n = static_cast<Index>(rows) * static_cast<Index>(cols);
  Matrix<double> images(n, static_cast<Index>(count));
  std::vector<unsigned char> buf(static_cast<std::size_t>(n));
  for (std::uint32_t j = 0; j < count; ++j) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw std::runtime_error("IDX: truncated image data in " + path);
    for (Index i = 0; i < n; ++i)
      images(i, static_cast<Index>(j)) = double(buf[static_cast<std::size_t>(i)]) / 255.0;
  }
  return images;
}

/// Reads an IDX label file (magic 0x00000801).
inline std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("IDX: cannot open " + path);
  if (detail::read_be32(in) != 0x00000801u)
    throw std::runtime_error("IDX: bad magic for label file " + path);
  const auto count = detail::read_be32(in);
  std::vector<unsigned char> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw std::runtime_error("IDX: truncated label data in " + path);
  return std::vector<int>(buf.begin(), buf.end());
}

/// Binary classification problem from raw IDX files, keeping only the two
/// requested digits (positive label maps to +1).
inline ClassificationProblem<double> make_idx_classification(const std::string& images_path,
                                                             const std::string& labels_path,
                                                             int digit_pos = 1,
                                                             int digit_neg = 7) {
  const Matrix<double> images = load_idx_images(images_path);
  const std::vector<int> labels = load_idx_labels(labels_path);
  if (static_cast<Index>(labels.size()) != images.cols())
    throw std::runtime_error("IDX: image/label count mismatch");
  std::vector<Index> keep;
  for (Index j = 0; j < images.cols(); ++j)
    if (labels[static_cast<std::size_t>(j)] == digit_pos ||
        labels[static_cast<std::size_t>(j)] == digit_neg)
      keep.push_back(j);
  Matrix<double> A(images.rows(), static_cast<Index>(keep.size()));
  Vector<double> b(static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    A.col(static_cast<Index>(j)) = images.col(keep[j]);
    b[static_cast<Index>(j)] = labels[static_cast<std::size_t>(keep[j])] == digit_pos ? 1.0 : -1.0;
  }
  return ClassificationProblem<double>(std::move(A), std::move(b));
}

// --- synthetic SPD operators -----------------------------------------------------

/// Q D Q' with a seeded random orthogonal factor and log-uniform spectrum on
/// [1/kappa, 1]; the extreme eigenvalues are pinned so kappa_2 is exact.
template <typename Scalar>
Matrix<Scalar> synthetic_spd_matrix(Index n, Scalar kappa, unsigned seed) {
  if (kappa < Scalar(1)) throw std::invalid_argument("synthetic_spd: kappa must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);

  Matrix<Scalar> G(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) G(i, j) = Scalar(dist(rng));
  Eigen::HouseholderQR<Matrix<Scalar>> qr(G);
  Matrix<Scalar> Q = qr.householderQ() * Matrix<Scalar>::Identity(n, n);
  const Matrix<Scalar> R = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (R(j, j) < Scalar(0)) Q.col(j) = -Q.col(j);

  Vector<Scalar> d(n);
  const double lmin = 1.0 / double(kappa);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (Index i = 0; i < n; ++i) d[i] = Scalar(std::exp(std::log(lmin) * (1.0 - uni(rng))));
  d[0] = Scalar(lmin);
  if (n > 1) d[n - 1] = Scalar(1);

  return Q * d.asDiagonal() * Q.transpose();
}

template <typename Scalar>
SymmetricOperator<Scalar> synthetic_spd(Index n, Scalar kappa, unsigned seed) {
  return operator_from_dense(synthetic_spd_matrix(n, kappa, seed));
}

/// Seeded symmetric indefinite operator: like synthetic_spd but with a
/// random subset of eigenvalues negated. Used by the subproblem exercises.
template <typename Scalar>
Matrix<Scalar> synthetic_indefinite_matrix(Index n, Scalar kappa, unsigned seed) {
  Matrix<Scalar> A = synthetic_spd_matrix(n, kappa, seed);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(A);
  Vector<Scalar> d = eig.eigenvalues();
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::bernoulli_distribution flip(0.5);
  bool any = false;
  for (Index i = 0; i < n; ++i)
    if (flip(rng)) {
      d[i] = -d[i];
      any = true;
    }
  if (!any) d[0] = -d[0];
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace qnk
