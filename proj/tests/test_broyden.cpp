#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qnk/broyden.hpp"
#include "qnk/problems.hpp"

using namespace qnk;
using Vec = Vector<double>;
using Mat = Matrix<double>;

namespace {

// term-by-term assembly of the family update, kept independent of the
// implementation it checks
Mat broyden_update_oracle(const Mat& H, const Vec& s, const Vec& y, double phi) {
  const double sy = s.dot(y);
  const Vec Hy = H * y;
  const double yHy = y.dot(Hy);
  const Vec v = s / sy - Hy / yHy;
  return H + s * s.transpose() / sy - Hy * Hy.transpose() / yHy +
         phi * yHy * v * v.transpose();
}

Vec unit(Index n, Index i) {
  Vec e = Vec::Zero(n);
  e[i] = 1;
  return e;
}

}  // namespace

TEST_CASE("broyden_update fixed point when Hy = s") {
  const Mat I = Mat::Identity(3, 3);
  const Vec e1 = unit(3, 0);
  for (double phi : {1.0, 0.0}) {
    const Mat H = broyden_update(I, e1, e1, phi);
    CHECK((H - I).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("broyden_update satisfies the secant equation and matches the oracle") {
  std::mt19937_64 rng(11);
  const Index n = 5;
  const Mat A = synthetic_spd_matrix<double>(n, 30.0, 2);
  Mat H = Mat::Identity(n, n);
  for (double phi : {0.0, 0.5, 1.0}) {
    const Vec s = random_vector<double>(n, rng);
    const Vec y = A * s;
    const Mat Hn = broyden_update(H, s, y, phi);
    CHECK((Hn * y - s).norm() / s.norm() <= 1e-10);
    CHECK((Hn - Hn.transpose()).norm() <= 1e-12 * Hn.norm());
    CHECK((Hn - broyden_update_oracle(H, s, y, phi)).norm() <= 1e-12 * Hn.norm());
    H = Hn;  // walk the approximation away from the identity
  }
}

TEST_CASE("broyden_update breakdown thresholds") {
  const Mat I = Mat::Identity(2, 2);
  Vec s(2), y(2);
  s << 1, 0;
  y << 0, 1;  // s'y = 0
  CHECK_THROWS_AS(broyden_update(I, s, y, 1.0), BreakdownError);

  Mat H = Mat::Zero(2, 2);
  H(0, 0) = 1;  // y'Hy = 0 for y = e2
  Vec s2(2), y2(2);
  s2 << 1, 1;
  y2 << 0, 1;
  CHECK_THROWS_AS(broyden_update(H, s2, y2, 1.0), BreakdownError);
}

TEST_CASE("sr1_phi and the rank-1 form") {
  const Mat I = Mat::Identity(2, 2);
  const Vec e1 = unit(2, 0);
  CHECK(sr1_phi(I, (2 * e1).eval(), e1) == doctest::Approx(2.0));
  CHECK_THROWS_AS(sr1_phi(I, e1, e1), BreakdownError);

  // feeding phi_sr1 into the family reproduces the rank-1 update
  std::mt19937_64 rng(5);
  const Index n = 4;
  const Mat A = synthetic_spd_matrix<double>(n, 10.0, 3);
  Mat H = Mat::Identity(n, n);
  H(0, 0) = 2.0;  // move off the fixed point
  const Vec s = random_vector<double>(n, rng);
  const Vec y = A * s;
  const double phi = sr1_phi(H, s, y);
  const Mat via_family = broyden_update(H, s, y, phi);
  const Vec z = s - H * y;
  const Mat rank1 = H + z * z.transpose() / z.dot(y);
  CHECK((via_family - rank1).norm() <= 1e-10 * rank1.norm());
}

TEST_CASE("phi_critical at the first iteration equals -g0'g0 / g1'g1") {
  const Index n = 10;
  const Mat A = synthetic_spd_matrix<double>(n, 100.0, 4);
  std::mt19937_64 rng(17);
  const Vec b = random_vector<double>(n, rng);

  // one CG step from x0 = 0 with H = I
  const Vec g0 = -b;
  const Vec d = b;
  const double alpha = g0.squaredNorm() / d.dot(A * d);
  const Vec g1 = g0 + alpha * (A * d);
  const Vec s = alpha * d;
  const Vec y = g1 - g0;

  const double dense = phi_critical(Mat::Identity(n, n).eval(), s, y);
  const double lemma = -g0.squaredNorm() / g1.squaredNorm();
  CHECK(std::abs(dense - lemma) <= 1e-8 * std::abs(lemma));
  CHECK(dense < 0);
}

TEST_CASE("gamma_next special values and monotonicity in phi") {
  CHECK(gamma_next(0.7, 1.0, 3.0, 5.0) == doctest::Approx(1.0));
  CHECK(gamma_next(1.0, 0.0, 2.0, 2.0) == doctest::Approx(0.5));

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double gamma = 0.05 + uni(rng);
    const double rho_k = 0.1 + uni(rng);
    const double rho_k1 = 0.1 + uni(rng);
    double p1 = uni(rng), p2 = uni(rng);
    if (p1 > p2) std::swap(p1, p2);
    CHECK(gamma_next(gamma, p1, rho_k, rho_k1) <= gamma_next(gamma, p2, rho_k, rho_k1) + 1e-15);
  }
}

TEST_CASE("broyden_solve takes the exact Newton step on the identity") {
  const Index n = 6;
  std::mt19937_64 rng(29);
  const Vec b = random_vector<double>(n, rng);
  const QuadraticModel<double> model(identity_operator<double>(n), b);
  const auto r = broyden_solve(model, Vec::Zero(n), Preconditioner<double>::identity(n),
                               PhiSchedule<double>::bfgs(), 1e-12, 5);
  CHECK(r.trace.status() == SolveStatus::converged);
  CHECK(r.trace.records().back().k == 1);
  CHECK((r.x - b).norm() <= 1e-12 * b.norm());
}

TEST_CASE("broyden_solve quadratic termination at verification scale") {
  const Index n = 30;
  const Mat A = synthetic_spd_matrix<double>(n, 1e3, 6);
  std::mt19937_64 rng(31);
  const Vec b = random_vector<double>(n, rng);
  const QuadraticModel<double> model(operator_from_dense(A), b);
  const auto H0 = Preconditioner<double>::identity(n);

  auto r = broyden_solve(model, Vec::Zero(n), H0, PhiSchedule<double>::bfgs(), 1e-10,
                         static_cast<int>(n));
  CHECK(r.trace.status() == SolveStatus::converged);

  // SR1 for the full n steps inverts A when no breakdown occurs
  BroydenOptions<double> opts;
  opts.rtol = 0.0;
  opts.maxit = static_cast<int>(n);
  auto sr1 = broyden_solve(model, Vec::Zero(n), H0, PhiSchedule<double>::sr1(), opts);
  REQUIRE_FALSE(sr1.breakdown.has_value());
  CHECK((sr1.H * A - Mat::Identity(n, n)).norm() <= 1e-6);
}

TEST_CASE("measured gamma stays at one for BFGS") {
  const Index n = 15;
  const Mat A = synthetic_spd_matrix<double>(n, 100.0, 8);
  std::mt19937_64 rng(37);
  const QuadraticModel<double> model(operator_from_dense(A), random_vector<double>(n, rng));
  BroydenOptions<double> opts;
  opts.rtol = 1e-12;
  opts.maxit = static_cast<int>(n);
  opts.shadow_pcg = true;
  const auto r = broyden_solve(model, Vec::Zero(n), Preconditioner<double>::identity(n),
                               PhiSchedule<double>::bfgs(), opts);
  for (const auto& rec : r.trace.records())
    if (rec.gamma) CHECK(std::abs(*rec.gamma - 1.0) <= 1e-10);
}
