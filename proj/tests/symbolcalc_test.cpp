#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "hkexp/symbolcalc.hpp"
#include "test_support.hpp"

using namespace hkexp;

namespace {

MultiIndex mi(std::initializer_list<int> e) { return MultiIndex(e); }

Polynomial x_pow(int k) { return Polynomial::monomial({k}); }

/// Random potentials for the operator/symbol equivalence checks: n <= 2, degree <= 3.
std::vector<Polynomial> random_potentials(unsigned seed, int count) {
  std::mt19937 rng(seed);
  std::vector<Polynomial> out;
  for (int k = 0; k < count; ++k) out.push_back(testkit::random_potential(rng, 1 + k % 2, 1 + k % 3));
  return out;
}

}  // namespace

TEST(PhaseSymbol, OperatorSymbolPairing) {
  // x d/dx has symbol x (i xi).
  const DiffOp euler = DiffOp::derivative(mi({1})).left_multiply(x_pow(1));
  PhaseSymbol expected(1);
  expected.add_term(mi({1}), mi({1}), ComplexRational(0, 1));
  EXPECT_EQ(symbol_of(euler), expected);
  // Laplacian has symbol -|xi|^2.
  PhaseSymbol lap(2);
  lap.add_term(mi({2, 0}), mi({0, 0}), -1);
  lap.add_term(mi({0, 2}), mi({0, 0}), -1);
  EXPECT_EQ(symbol_of(DiffOp::laplacian(2)), lap);
}

TEST(PhaseSymbol, JsonRoundTrip) {
  PhaseSymbol p(2);
  p.add_term(mi({1, 0}), mi({0, 2}), ComplexRational(rational(3, 5), rational(-7, 2)));
  p.add_term(mi({0, 0}), mi({1, 1}), -4);
  p.add_term(mi({2, 1}), mi({0, 0}), ComplexRational(0, 9));
  const auto j = to_json(p);
  EXPECT_EQ(j.at("terms").size(), 4u);
  EXPECT_EQ(phase_symbol_from_json(nlohmann::json::parse(j.dump())), p);
  EXPECT_THROW(phase_symbol_from_json(nlohmann::json::parse(R"({"dim": 1})")), FormatError);
}

TEST(FullSymbolStep, FirstStepMatchesSecondOperator) {
  // p_2^1 = (xi/i) V' - V''/2 + V^2 for n = 1.
  const Polynomial v = x_pow(3) + x_pow(1) * rational(2, 3);
  const GradedSymbol p2 = full_symbol_step(first_symbol(v), v);
  PhaseSymbol expected = PhaseSymbol::from_polynomial(v * v - v.derivative(0, 2) * rational(1, 2));
  expected += PhaseSymbol::from_polynomial(v.derivative(0)).times_xi(0) * ComplexRational(0, -1);
  ASSERT_EQ(p2.grades.size(), 1u);
  EXPECT_EQ(p2.grade(4), expected);
}

TEST(FullSymbolStep, ZeroPotentialGivesZero) {
  const Polynomial zero(2);
  GradedSymbol p = first_symbol(zero);
  for (int m = 2; m <= 5; ++m) {
    p = full_symbol_step(p, zero);
    EXPECT_TRUE(p.grades.empty());
  }
}

TEST(FullSymbolStep, QuadraticPotentialThirdOperator) {
  const Polynomial v = x_pow(2);
  const auto chain = x_chain(v, 3);
  const GradedSymbol p3 = full_symbol_step(full_symbol_step(first_symbol(v), v), v);
  EXPECT_EQ(p3, symbol_of(chain[3]));
}

TEST(FullSymbolStep, RejectsMisgradedInput) {
  GradedSymbol bad{2, 1, {}};
  bad.add(3, PhaseSymbol::from_polynomial(x_pow(1)));
  EXPECT_THROW(full_symbol_step(bad, x_pow(1)), GradingViolation);
}

TEST(SymbolEquivalence, FullSymbolsMatchOperatorsUpToSix) {
  for (const auto& v : random_potentials(17, 10)) {
    const auto chain = x_chain(v, 6);
    GradedSymbol p = first_symbol(v);
    for (int m = 1; m <= 6; ++m) {
      if (m > 1) p = full_symbol_step(p, v);
      EXPECT_EQ(p, symbol_of(chain[m])) << "m = " << m << ", V = " << v;
    }
  }
}

TEST(SymbolEquivalence, PrincipalAndSubprincipalRecursions) {
  for (const auto& v : random_potentials(29, 10)) {
    const auto chain = x_chain(v, 6);
    GradedSymbol sigma = first_symbol(v);
    GradedSymbol sub{1, v.dim(), {}};
    for (int m = 1; m <= 6; ++m) {
      if (m > 1) {
        sub = subprincipal_step(sub, sigma, v);
        sigma = principal_step(sigma);
      }
      const GradedSymbol full = symbol_of(chain[m]);
      EXPECT_EQ(sigma, principal_part(full)) << "m = " << m;
      EXPECT_EQ(sub, subprincipal_part(full)) << "m = " << m;
      EXPECT_EQ(sigma, principal_symbol_closed_form(m, v)) << "m = " << m;
      EXPECT_EQ(sigma.grade(2 * m), sigma_top(m, v)) << "m = " << m;
    }
  }
}

TEST(SymbolEquivalence, SubprincipalOfFourthOperatorForCubic) {
  const Polynomial v = x_pow(3);
  GradedSymbol sigma = first_symbol(v);
  GradedSymbol sub{1, 1, {}};
  for (int m = 2; m <= 4; ++m) {
    sub = subprincipal_step(sub, sigma, v);
    sigma = principal_step(sigma);
  }
  EXPECT_EQ(sub, subprincipal_part(symbol_of(x_chain(v, 4)[4])));
}

TEST(SubprincipalStep, SecondSymbolContainsSquareAndLaplacian) {
  const Polynomial v = Polynomial::monomial({2, 1}) + Polynomial::coordinate(2, 1);
  const GradedSymbol sub = subprincipal_step(GradedSymbol{1, 2, {}}, first_symbol(v), v);
  EXPECT_EQ(sub.grade(4), PhaseSymbol::from_polynomial(v * v - v.laplacian() * rational(1, 2)));
}

TEST(SubprincipalStep, ZeroPotentialGivesZero) {
  const Polynomial zero(1);
  EXPECT_TRUE(subprincipal_step(GradedSymbol{1, 1, {}}, first_symbol(zero), zero).grades.empty());
}

TEST(SigmaTop, Examples) {
  EXPECT_EQ(sigma_top(1, x_pow(2)), PhaseSymbol::from_polynomial(x_pow(2)));
  PhaseSymbol two(1);
  two.add_term(mi({1}), mi({1}), ComplexRational(0, -2));
  EXPECT_EQ(sigma_top(2, x_pow(2)), two);
  PhaseSymbol three(1);
  three.add_term(mi({2}), mi({1}), -6);
  EXPECT_EQ(sigma_top(3, x_pow(3)), three);
}

TEST(PrincipalStep, SecondSymbolForQuadratic) {
  const GradedSymbol s = principal_step(first_symbol(x_pow(2)));
  EXPECT_EQ(s.grade(4), sigma_top(2, x_pow(2)));
  // sum of -i xi_r dV/dx_r for n = 2.
  const Polynomial v = Polynomial::monomial({1, 2});
  PhaseSymbol expected(2);
  expected.add_term(mi({1, 0}), mi({0, 2}), ComplexRational(0, -1));
  expected.add_term(mi({0, 1}), mi({1, 1}), ComplexRational(0, -2));
  EXPECT_EQ(principal_step(first_symbol(v)).grade(4), expected);
}

TEST(RhoOdd, SubstitutionTable) {
  EXPECT_EQ(mehler_derivative_constant(mi({0})), 1);
  EXPECT_EQ(mehler_derivative_constant(mi({2})), rational(-1, 2));
  EXPECT_EQ(mehler_derivative_constant(mi({4})), rational(3, 4));
}

TEST(RhoOdd, FirstIsPotential) {
  const Polynomial v = Polynomial::monomial({1, 1}) + Polynomial::constant(2, 3);
  EXPECT_EQ(rho_odd(first_symbol(v)), GaussianLaurent::term(0, v));
}

TEST(RhoOdd, ThirdForQuadraticMatchesDiagonal) {
  const auto chain = x_chain(x_pow(2), 3);
  EXPECT_EQ(rho_odd(chain[3]), diagonal_eval(chain[3]).coeff(4));
  // rho_3 = x.grad V - Delta V / (2 s) = 2x^2 - 1/s.
  GaussianLaurent expected(1);
  expected.add(0, x_pow(2) * Rational(2));
  expected.add(-1, Polynomial::constant(1, -1));
  EXPECT_EQ(rho_odd(chain[3]), expected);
}

TEST(RhoOdd, MatchesDiagonalLeadingTerm) {
  for (const auto& v : random_potentials(41, 10)) {
    const auto chain = x_chain(v, 5);
    for (int m : {1, 3, 5}) {
      const HSeries diag = diagonal_eval(chain[m], m + 1);
      EXPECT_GE(diag.lowest_order(), m + 1);
      EXPECT_EQ(rho_odd(chain[m]), diag.coeff(m + 1)) << "m = " << m << ", V = " << v;
    }
  }
}

TEST(RhoOdd, RejectsEvenIndex) {
  const auto chain = x_chain(x_pow(2), 2);
  EXPECT_THROW(rho_odd(chain[2]), DomainError);
}

TEST(RhoEven, MatchesDiagonalLeadingTerm) {
  for (const auto& v : random_potentials(43, 10)) {
    const auto chain = x_chain(v, 6);
    for (int m : {2, 4, 6}) {
      const HSeries diag = diagonal_eval(chain[m], m + 2);
      EXPECT_GE(diag.lowest_order(), m + 2);
      EXPECT_EQ(rho_even(chain[m]), diag.coeff(m + 2)) << "m = " << m << ", V = " << v;
    }
  }
}

TEST(RhoEven, LeadingTermIgnoresLowerOrderParts) {
  // Adding a term of order i - 3 to the grade-(m+i) component leaves the leading coefficient fixed.
  std::mt19937 rng(5);
  for (const auto& v : random_potentials(47, 10)) {
    const auto chain = x_chain(v, 6);
    for (int m : {2, 4, 6}) {
      KantorovitzTerm perturbed = chain[m];
      bool changed = false;
      for (const auto& [g, op] : chain[m].op.grades()) {
        const int i = g - m;
        if (i < 3) continue;
        Polynomial coeff = testkit::random_polynomial(rng, v.dim(), 2);
        if (coeff.is_zero()) coeff = Polynomial::constant(v.dim(), 1);
        DiffOp extra(v.dim());
        extra.add_term(MultiIndex::unit(v.dim(), 0, i - 3), coeff);
        perturbed.op.add(g, extra);
        changed = true;
      }
      EXPECT_EQ(diagonal_eval(perturbed, m + 2).coeff(m + 2), diagonal_eval(chain[m], m + 2).coeff(m + 2))
          << "m = " << m;
      if (changed) EXPECT_FALSE(perturbed.op == chain[m].op);
    }
  }
}

TEST(GenericSymbol, SpecializesToConcreteSymbols) {
  for (const auto& v : random_potentials(53, 6)) {
    GenericGradedSymbol gs = first_generic_symbol(v.dim());
    GenericGradedSymbol gsub{1, v.dim(), {}};
    GradedSymbol sigma = first_symbol(v);
    GradedSymbol sub{1, v.dim(), {}};
    for (int m = 2; m <= 5; ++m) {
      gsub = subprincipal_step(gsub, gs, GenericPotential{});
      gs = principal_step(gs);
      sub = subprincipal_step(sub, sigma, v);
      sigma = principal_step(sigma);
      for (const auto& [g, q] : sigma.grades) EXPECT_EQ(gs.grade(g).specialize(v), q);
      for (const auto& [g, q] : sub.grades) EXPECT_EQ(gsub.grade(g).specialize(v), q);
      for (const auto& [g, q] : gsub.grades) EXPECT_EQ(q.specialize(v), sub.grade(g));
    }
  }
}

TEST(GenericSymbol, SubprincipalIsAtMostQuadraticInPotential) {
  for (int n = 1; n <= 2; ++n) {
    GenericGradedSymbol gs = first_generic_symbol(n);
    GenericGradedSymbol gsub{1, n, {}};
    for (int m = 2; m <= 6; ++m) {
      gsub = subprincipal_step(gsub, gs, GenericPotential{});
      gs = principal_step(gs);
      for (const auto& [g, q] : gs.grades) EXPECT_EQ(q.v_degree(), 1);
      for (const auto& [g, q] : gsub.grades) EXPECT_LE(q.v_degree(), 2);
    }
  }
}

TEST(InvariantStructure, FirstIsPlainGaussianIntegral) {
  for (int n = 1; n <= 3; ++n) {
    const InvariantStructure st = invariant_structure(1, n);
    ASSERT_EQ(st.chi.size(), 1u);
    EXPECT_EQ(st.chi.at(0), SLaurent::monomial(0));
    EXPECT_EQ(st.weight_degree(), 0);
  }
}

TEST(InvariantStructure, WeightDegreeBound) {
  for (int n = 1; n <= 3; ++n)
    for (int m : {3, 5, 7}) {
      const InvariantStructure st = invariant_structure(m, n);
      EXPECT_LE(st.weight_degree(), m - 1) << "m = " << m << ", n = " << n;
      for (const auto& [k, c] : st.chi) EXPECT_LE(2 * k, m - 1);
    }
}

TEST(InvariantStructure, ReproducesIntegratedLeadingTerm) {
  for (const auto& v : random_potentials(59, 8)) {
    const auto chain = x_chain(v, 5);
    for (int m : {1, 3, 5}) {
      const InvariantStructure st = invariant_structure(m, v.dim());
      const GaussianIntegral direct = gaussian_integral(rho_odd(chain[m]));
      EXPECT_EQ(st.apply_unaveraged(v), direct) << "m = " << m << ", V = " << v;
      EXPECT_EQ(st.apply(v), direct) << "m = " << m << ", V = " << v;
    }
  }
}

TEST(InvariantStructure, FifthOrderQuadratureOnQuartic) {
  const Polynomial v = x_pow(4);
  const InvariantStructure st = invariant_structure(5, 1);
  const GaussianLaurent rho = rho_odd(x_chain(v, 5)[5]);
  for (double s : {0.3, 0.5, 1.2}) {
    const double limit = 12.0 / std::sqrt(s);
    const double numeric = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return rho.eval(s, std::span<const double>(&x, 1)); }, -limit, limit, 15, 1e-14);
    const double structural = st.apply(v).eval(s);
    EXPECT_NEAR(structural, numeric, 1e-10 * std::max(1.0, std::abs(numeric))) << "s = " << s;
  }
}

TEST(InvariantStructure, RejectsEvenIndex) {
  EXPECT_THROW(invariant_structure(4, 1), DomainError);
  EXPECT_THROW(invariant_structure(9, 1), DomainError);
}
