#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qnk/core.hpp"
#include "qnk/problems.hpp"

using namespace qnk;
using Vec = Vector<double>;
using Mat = Matrix<double>;

namespace {

QuadraticModel<double> diag_model(std::initializer_list<double> diag, Vec b, double c = 0) {
  Mat A = Mat::Zero(static_cast<Index>(diag.size()), static_cast<Index>(diag.size()));
  Index i = 0;
  for (double d : diag) A(i, i) = d, ++i;
  return QuadraticModel<double>(operator_from_dense(A), std::move(b), c);
}

}  // namespace

TEST_CASE("q_value on small models") {
  Vec x(2);
  x << 1, 1;
  CHECK(q_value(diag_model({1, 1}, Vec::Zero(2)), x) == doctest::Approx(1.0));

  Vec b(2);
  b << 3, -2;
  CHECK(q_value(diag_model({5, 7}, b, 4.5), Vec::Zero(2)) == doctest::Approx(4.5));

  Vec b2(2), x2(2);
  b2 << 1, 1;
  x2 << 1, 0;
  CHECK(q_value(diag_model({2, 4}, b2), x2) == doctest::Approx(0.0));
}

TEST_CASE("q_gradient") {
  Vec b(2);
  b << 2, -1;
  const auto model = diag_model({1, 2}, b);
  CHECK((q_gradient(model, Vec::Zero(2)) + b).norm() == doctest::Approx(0.0));

  Vec v(3);
  v << 1, -2, 3;
  const auto ident = QuadraticModel<double>(identity_operator<double>(3), Vec::Zero(3));
  CHECK((q_gradient(ident, v) - v).norm() == doctest::Approx(0.0));

  Vec b2(2), x2(2), expected(2);
  b2 << 1, 1;
  x2 << 1, 1;
  expected << 0, 1;
  CHECK((q_gradient(diag_model({1, 2}, b2), x2) - expected).norm() == doctest::Approx(0.0));
}

TEST_CASE("exact_linesearch") {
  Vec g(2);
  g << 1, 2;
  const auto ident = QuadraticModel<double>(identity_operator<double>(2), Vec::Zero(2));
  CHECK(exact_linesearch(ident, g, (-g).eval()) == doctest::Approx(1.0));

  Vec d(2);
  d << 2, -1;  // orthogonal to g
  CHECK(exact_linesearch(ident, g, d) == doctest::Approx(0.0));

  Vec g2(2);
  g2 << 1, 1;
  CHECK(exact_linesearch(diag_model({1, 4}, Vec::Zero(2)), g2, (-g2).eval()) ==
        doctest::Approx(0.4));
}

TEST_CASE("exact_linesearch flags vanishing curvature") {
  Vec g(2), d(2);
  g << 1, 0;
  d << 1, 1;  // d'Ad = 0 for A = diag(1, -1)
  const auto model = diag_model({1, -1}, Vec::Zero(2));
  CHECK_THROWS_AS(exact_linesearch(model, g, d), BreakdownError);
}

TEST_CASE("dimension mismatches are rejected") {
  const auto model = diag_model({1, 2}, Vec::Zero(2));
  CHECK_THROWS_AS(q_value(model, Vec::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(q_gradient(model, Vec::Zero(1)), std::invalid_argument);
  CHECK_THROWS_AS(model.A(Vec::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(QuadraticModel<double>(identity_operator<double>(3), Vec::Zero(2)),
                  std::invalid_argument);
}

TEST_CASE("directional derivative agrees with the gradient") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 8;
    const auto A = synthetic_spd<double>(n, 50.0, 100 + trial);
    const QuadraticModel<double> model(A, random_vector<double>(n, rng), 1.5);
    const Vec x = random_vector<double>(n, rng);
    const Vec d = random_vector<double>(n, rng);
    const double eps = 1e-5 * (1 + x.norm()) / d.norm();
    const double fd =
        (q_value(model, (x + eps * d).eval()) - q_value(model, (x - eps * d).eval())) / (2 * eps);
    const double exact = q_gradient(model, x).dot(d);
    CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("sampled operator checks") {
  const auto A = synthetic_spd<double>(12, 100.0, 7);
  CHECK(is_linear(A));
  CHECK(is_symmetric(A));

  // an intentionally nonsymmetric action fails the sampled check
  Mat N = Mat::Zero(3, 3);
  N(0, 1) = 1;
  const SymmetricOperator<double> bad(3, [N](const Vec& v) -> Vec { return N * v; });
  CHECK_FALSE(is_symmetric(bad));

  const auto H0 = Preconditioner<double>::identity(5);
  CHECK(H0.is_identity());
  CHECK(is_spd_sampled(H0));
}

TEST_CASE("solve trace bookkeeping") {
  SolveTrace<double> trace;
  TraceRecord<double> rec;
  rec.k = 0;
  trace.append(rec);
  rec.k = 0;
  CHECK_THROWS_AS(trace.append(rec), std::invalid_argument);
  rec.k = 1;
  trace.append(rec);
  trace.finalize(SolveStatus::converged);
  CHECK(trace.status() == SolveStatus::converged);
  CHECK_THROWS_AS(trace.finalize(SolveStatus::breakdown), std::logic_error);
}
