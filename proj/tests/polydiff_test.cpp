#include <gtest/gtest.h>

#include <random>

#include "hkexp/diff_op.hpp"
#include "hkexp/graded_op.hpp"
#include "test_support.hpp"

using namespace hkexp;
using hkexp::testkit::monomial_basis;
using hkexp::testkit::random_diff_op;
using hkexp::testkit::same_action;

namespace {

Polynomial x1(int n = 1) { return Polynomial::coordinate(n, 0); }
DiffOp d1(int k = 1) { return DiffOp::derivative(MultiIndex::unit(1, 0, k)); }

}  // namespace

TEST(Polynomial, MonomialProduct) {
  EXPECT_EQ(poly_mul(x1(), x1()), Polynomial::monomial({2}));
}

TEST(Polynomial, MultiplyByOne) {
  Polynomial p = Polynomial::monomial({2, 1}, rational(3, 7)) + Polynomial::constant(2, 5);
  EXPECT_EQ(poly_mul(p, Polynomial::constant(2, 1)), p);
}

TEST(Polynomial, DifferenceOfSquares) {
  Polynomial a = Polynomial::coordinate(2, 0), b = Polynomial::coordinate(2, 1);
  EXPECT_EQ(poly_mul(a + b, a - b), Polynomial::monomial({2, 0}) - Polynomial::monomial({0, 2}));
}

TEST(Polynomial, NoStoredZeros) {
  Polynomial p = x1() - x1();
  EXPECT_TRUE(p.is_zero());
  EXPECT_EQ(p.degree(), -1);
}

TEST(Polynomial, DimensionMismatchThrows) {
  EXPECT_THROW(poly_mul(x1(1), x1(2)), DimensionMismatch);
  EXPECT_THROW(op_apply(DiffOp::identity(2), x1(1)), DimensionMismatch);
  EXPECT_THROW(op_compose(DiffOp::identity(2), DiffOp::identity(3)), DimensionMismatch);
  EXPECT_THROW(op_commutator(DiffOp::identity(1), DiffOp::identity(3)), DimensionMismatch);
}

TEST(Polynomial, DimensionOutOfRange) {
  EXPECT_THROW(Polynomial(0), DomainError);
  EXPECT_THROW(Polynomial(4), DomainError);
}

TEST(Polynomial, JsonRoundTripIsExact) {
  Rational big("123456789012345678901234567891/7");
  big.canonicalize();
  Polynomial p(2);
  p.add_term({3, 1}, big);
  p.add_term({0, 0}, rational(-5, 3));
  p.add_term({1, 4}, Rational("-1/98765432109876543210"));
  const auto j = to_json(p);
  EXPECT_EQ(polynomial_from_json(j), p);
  EXPECT_EQ(polynomial_from_json(nlohmann::json::parse(j.dump())), p);
}

TEST(Polynomial, JsonRejectsMalformed) {
  EXPECT_THROW(polynomial_from_json(nlohmann::json::parse(R"({"terms": []})")), FormatError);
  EXPECT_THROW(polynomial_from_json(nlohmann::json::parse(
                   R"({"dim": 1, "terms": [{"alpha": [1, 2], "num": 1, "den": 1}]})")),
               FormatError);
  EXPECT_THROW(polynomial_from_json(nlohmann::json::parse(
                   R"({"dim": 1, "terms": [{"alpha": [1], "num": 1, "den": 0}]})")),
               FormatError);
}

TEST(DiffOp, DerivativePastCoordinate) {
  // d o x = x d + 1
  DiffOp expected = DiffOp::multiplication(x1()) * d1() + DiffOp::identity(1);
  EXPECT_EQ(op_compose(d1(), DiffOp::multiplication(x1())), expected);
}

TEST(DiffOp, ComposeWithIdentity) {
  std::mt19937 rng(7);
  DiffOp d = random_diff_op(rng, 2, 3, 2);
  EXPECT_EQ(op_compose(d, DiffOp::identity(2)), d);
  EXPECT_EQ(op_compose(DiffOp::identity(2), d), d);
}

TEST(DiffOp, SecondDerivativePastCoordinate) {
  // d^2 o x = x d^2 + 2 d, checked against sequential application on 1, x, x^2, x^3.
  const DiffOp lhs = op_compose(d1(2), DiffOp::multiplication(x1()));
  const DiffOp rhs = DiffOp::multiplication(x1()) * d1(2) + d1() * Rational(2);
  for (int k = 0; k <= 3; ++k) {
    const Polynomial p = Polynomial::monomial({k});
    const Polynomial sequential = op_apply(d1(2), x1() * p);
    EXPECT_EQ(op_apply(lhs, p), sequential);
    EXPECT_EQ(op_apply(rhs, p), sequential);
  }
  EXPECT_EQ(lhs, rhs);
}

TEST(DiffOp, CommutatorSecondDerivativeCoordinate) {
  EXPECT_EQ(op_commutator(d1(2), DiffOp::multiplication(x1())), d1() * Rational(2));
}

TEST(DiffOp, SelfCommutatorVanishes) {
  std::mt19937 rng(11);
  DiffOp d = random_diff_op(rng, 2, 3, 3);
  EXPECT_TRUE(op_commutator(d, d).is_zero());
}

TEST(DiffOp, HalfLaplacianHalfRadius) {
  // [Delta/2, |x|^2/2] = sum x_i d_i + n/2, with the right side checked by direct application.
  for (int n = 1; n <= 3; ++n) {
    const DiffOp lap = DiffOp::laplacian(n) * rational(1, 2);
    const DiffOp r2 = DiffOp::multiplication(Polynomial::radius_squared(n) * rational(1, 2));
    DiffOp expected = DiffOp::identity(n) * rational(n, 2);
    for (int i = 0; i < n; ++i)
      expected += DiffOp::derivative(MultiIndex::unit(n, i)).left_multiply(Polynomial::coordinate(n, i));
    const DiffOp comm = op_commutator(lap, r2);
    for (const auto& p : monomial_basis(n, 4)) {
      const Polynomial direct = op_apply(lap, op_apply(r2, p)) - op_apply(r2, op_apply(lap, p));
      EXPECT_EQ(op_apply(comm, p), direct);
      EXPECT_EQ(op_apply(expected, p), direct);
    }
    EXPECT_EQ(comm, expected);
  }
}

TEST(DiffOp, ApplyExamples) {
  EXPECT_EQ(op_apply(d1(), Polynomial::monomial({3})), Polynomial::monomial({2}, 3));
  const Polynomial p = Polynomial::monomial({2}, rational(1, 3)) + Polynomial::constant(1, 4);
  EXPECT_EQ(op_apply(DiffOp::identity(1), p), p);
  const DiffOp euler = DiffOp::multiplication(x1()) * d1();
  for (int k = 0; k <= 6; ++k)
    EXPECT_EQ(op_apply(euler, Polynomial::monomial({k})), Polynomial::monomial({k}, k));
}

TEST(DiffOp, DegreeAndHomogeneousPart) {
  DiffOp d = d1(3) + DiffOp::multiplication(x1());
  EXPECT_EQ(d.degree(), 3);
  EXPECT_EQ(d.homogeneous_part(3), d1(3));
  EXPECT_EQ(DiffOp(1).degree(), -1);
}

TEST(DiffOpProperty, AssociativityJacobiAndAction) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 2;
    const DiffOp a = random_diff_op(rng, n, 3, 2);
    const DiffOp b = random_diff_op(rng, n, 3, 2);
    const DiffOp c = random_diff_op(rng, n, 3, 2);
    EXPECT_EQ(op_compose(op_compose(a, b), c), op_compose(a, op_compose(b, c)));
    const DiffOp jacobi = op_commutator(a, op_commutator(b, c)) + op_commutator(b, op_commutator(c, a)) +
                          op_commutator(c, op_commutator(a, b));
    EXPECT_TRUE(jacobi.is_zero());
    EXPECT_EQ(op_commutator(a, b), -op_commutator(b, a));
    for (const auto& p : monomial_basis(n, 6)) {
      EXPECT_EQ(op_apply(op_compose(a, b), p), op_apply(a, op_apply(b, p)));
    }
    EXPECT_TRUE(same_action(op_compose(op_compose(a, b), c), op_compose(a, op_compose(b, c)), 6));
  }
}

TEST(DiffOp, JsonRoundTrip) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const DiffOp d = random_diff_op(rng, 2, 3, 3);
    EXPECT_EQ(diff_op_from_json(nlohmann::json::parse(to_json(d).dump())), d);
  }
}

TEST(HGradedOp, ProductAddsGrades) {
  HGradedOp a = HGradedOp::single(1, d1());
  HGradedOp b = HGradedOp::single(2, DiffOp::multiplication(x1()));
  HGradedOp ab = a * b;
  ASSERT_EQ(ab.grades().size(), 1u);
  EXPECT_EQ(ab.grade(3), op_compose(d1(), DiffOp::multiplication(x1())));
  EXPECT_EQ(graded_op_from_json(to_json(ab)), ab);
}
