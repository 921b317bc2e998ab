#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qnk/broyden.hpp"
#include "qnk/limited_memory.hpp"
#include "qnk/problems.hpp"

using namespace qnk;
using Vec = Vector<double>;
using Mat = Matrix<double>;

namespace {

Vec unit(Index n, Index i) {
  Vec e = Vec::Zero(n);
  e[i] = 1;
  return e;
}

}  // namespace

TEST_CASE("lbfgs_apply degenerate cases") {
  auto mem = LbfgsMemory<double>::identity_base(3, 4);
  std::mt19937_64 rng(1);
  const Vec v = random_vector<double>(3, rng);
  CHECK((lbfgs_apply(mem, v) - v).norm() == doctest::Approx(0.0));

  const Vec e1 = unit(3, 0);
  lbfgs_push(mem, e1, e1);
  CHECK((lbfgs_apply(mem, e1) - e1).norm() == doctest::Approx(0.0));
}

TEST_CASE("lbfgs window matches the dense BFGS operator") {
  const Index n = 6;
  std::mt19937_64 rng(2);
  auto mem = LbfgsMemory<double>::identity_base(n, 3);
  Mat H = Mat::Identity(n, n);
  for (int k = 0; k < 3; ++k) {
    const Vec s = random_vector<double>(n, rng);
    Vec y = random_vector<double>(n, rng);
    if (s.dot(y) < 0) y = -y;
    mem.push(s, y);
    H = broyden_update(H, s, y, 1.0);  // dense BFGS oracle
  }
  for (int probe = 0; probe < 4; ++probe) {
    const Vec v = random_vector<double>(n, rng);
    const Vec dense = H * v;
    CHECK((mem.apply(v) - dense).norm() <= 1e-12 * dense.norm());
  }
}

TEST_CASE("lbfgs_push evicts the oldest pair") {
  const Index n = 5;
  const int m = 3;
  std::mt19937_64 rng(3);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int k = 0; k < m + 2; ++k) {
    const Vec s = random_vector<double>(n, rng);
    Vec y = random_vector<double>(n, rng);
    if (s.dot(y) < 0) y = -y;
    pairs.emplace_back(s, y);
  }
  auto full = LbfgsMemory<double>::identity_base(n, m);
  for (const auto& [s, y] : pairs) full.push(s, y);
  CHECK(full.size() == m);
  CHECK(full.stored_vector_count() == 2 * m);

  // window now equals a fresh memory holding just the last m pairs
  auto fresh = LbfgsMemory<double>::identity_base(n, m);
  for (std::size_t k = pairs.size() - m; k < pairs.size(); ++k)
    fresh.push(pairs[k].first, pairs[k].second);
  const Vec v = random_vector<double>(n, rng);
  CHECK((full.apply(v) - fresh.apply(v)).norm() <= 1e-14 * fresh.apply(v).norm());
}

TEST_CASE("lbfgs_push rejects vanishing curvature pairs") {
  auto mem = LbfgsMemory<double>::identity_base(2, 2);
  Vec s(2), y(2);
  s << 1, 0;
  y << 0, 1;
  CHECK_THROWS_AS(lbfgs_push(mem, s, y), BreakdownError);
  CHECK(mem.size() == 0);
}

TEST_CASE("lbfgs secant equation for the latest pair") {
  const Index n = 7;
  std::mt19937_64 rng(4);
  auto mem = LbfgsMemory<double>::identity_base(n, 4);
  const Mat A = synthetic_spd_matrix<double>(n, 20.0, 5);
  for (int k = 0; k < 6; ++k) {
    const Vec s = random_vector<double>(n, rng);
    const Vec y = A * s;
    mem.push(s, y);
    CHECK((mem.apply(y) - s).norm() <= 1e-10 * s.norm());
  }
}

TEST_CASE("lsr1 first insertion and the secant equation") {
  const Index n = 3;
  auto mem = Lsr1Memory<double>::identity_base(n, 2);
  const Vec e1 = unit(n, 0);
  lsr1_push(mem, (2 * e1).eval(), e1);  // z = s - y = e1
  CHECK((lsr1_apply(mem, e1) - 2 * e1).norm() <= 1e-12);

  auto degenerate = Lsr1Memory<double>::identity_base(n, 2);
  CHECK_THROWS_AS(lsr1_push(degenerate, e1, e1), BreakdownError);  // z = 0
  CHECK(degenerate.skips() == 1);
}

TEST_CASE("lsr1 empty window degenerates to the base") {
  auto mem = Lsr1Memory<double>::identity_base(4, 3);
  std::mt19937_64 rng(6);
  const Vec v = random_vector<double>(4, rng);
  CHECK((lsr1_apply(mem, v) - v).norm() == doctest::Approx(0.0));
}

TEST_CASE("lsr1 window matches dense SR1 along a quadratic trajectory") {
  const Index n = 8;
  const Mat A = synthetic_spd_matrix<double>(n, 40.0, 7);
  std::mt19937_64 rng(8);
  const Vec b = random_vector<double>(n, rng);

  // exact-line-search trajectory driven by the limited-memory operator
  auto mem = Lsr1Memory<double>::identity_base(n, n);
  Mat H = Mat::Identity(n, n);
  Vec x = Vec::Zero(n);
  Vec g = -b;
  for (int k = 0; k < 5; ++k) {
    const Vec d = -mem.apply(g);
    const Vec Ad = A * d;
    const double alpha = -g.dot(d) / d.dot(Ad);
    const Vec s = alpha * d;
    const Vec y = alpha * Ad;
    mem.push(s, y);
    H += (s - H * y) * (s - H * y).transpose() / (s - H * y).dot(y);  // dense SR1 oracle
    x += s;
    g += y;
    const Vec probe = random_vector<double>(n, rng);
    const Vec dense = H * probe;
    CHECK((mem.apply(probe) - dense).norm() <= 1e-9 * dense.norm());
    CHECK((mem.apply(y) - s).norm() <= 1e-10 * s.norm());
  }
}

TEST_CASE("limited-memory solvers reach the solution on SPD systems") {
  const Index n = 25;
  const Mat A = synthetic_spd_matrix<double>(n, 1e2, 9);
  std::mt19937_64 rng(10);
  const Vec b = random_vector<double>(n, rng);
  const auto op = operator_from_dense(A);
  const auto H0 = Preconditioner<double>::identity(n);
  LimitedMemoryOptions<double> opts;
  opts.rtol = 1e-10;
  opts.maxit = 200;

  const auto lb = lbfgs_solve(op, b, H0, Vec::Zero(n), 5, opts);
  CHECK(lb.trace.status() == SolveStatus::converged);
  CHECK((A * lb.x - b).norm() <= 1e-8 * b.norm());

  const auto sr = lsr1_solve(op, b, H0, Vec::Zero(n), static_cast<int>(n), opts);
  CHECK(sr.trace.status() == SolveStatus::converged);
  CHECK((A * sr.x - b).norm() <= 1e-8 * b.norm());
}

TEST_CASE("work counters follow the per-iteration accounting") {
  const Index n = 50;
  const int m = 4;
  std::mt19937_64 rng(11);
  auto lb = LbfgsMemory<double>::identity_base(n, m);
  auto sr = Lsr1Memory<double>::identity_base(n, m);
  for (int k = 0; k < m + 2; ++k) {  // fill past capacity
    const Vec s = random_vector<double>(n, rng);
    const Vec y = (s + 0.1 * random_vector<double>(n, rng)).eval();
    lb.push(s, y);
    sr.push(s, y);
  }
  const std::size_t nn = static_cast<std::size_t>(n);
  const std::size_t mm = static_cast<std::size_t>(m);

  std::size_t before = lb.multiplications();
  const Vec s = random_vector<double>(n, rng);
  const Vec y = (s + 0.1 * random_vector<double>(n, rng)).eval();
  lb.push(s, y);
  lb.apply(y);
  CHECK(lb.multiplications() - before == 4 * mm * nn + nn);

  before = sr.multiplications();
  sr.push(s, y);   // one application of the current operator + delta
  sr.apply(y);     // 2mn
  CHECK(sr.multiplications() - before == 4 * mm * nn + nn);
}
