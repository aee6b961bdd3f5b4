#include <gtest/gtest.h>

#include "hkexp/validate.hpp"

using namespace hkexp;
using namespace hkexp::validate;

TEST(Validate, PublishedGenericOperators) {
  for (int n = 1; n <= 3; ++n) {
    const Check c = published_generic_operators(n);
    EXPECT_TRUE(c.passed) << c.detail;
  }
}

TEST(Validate, ExactTiersAgreeOnFixturesAndRandomPotentials) {
  std::vector<Polynomial> vs = fixture_potentials();
  for (const auto& v : random_potentials(3, 4)) vs.push_back(v);
  for (const Check& c : {recursion_vs_closed_form(vs), second_order_identity(vs), operator_vs_symbol(vs),
                         principal_subprincipal(vs), symbol_vs_diagonal(vs), upsilon0_identity(vs)})
    EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}

TEST(Validate, CorruptedDerivativeTableIsDetected) {
  const std::vector<Polynomial> vs = fixture_potentials();
  EXPECT_FALSE(symbol_vs_diagonal(vs, corrupted_derivative_constant).passed);
  // Upsilon_0 comes from X_1 alone, which has no derivatives; Upsilon_1 does see the table.
  EXPECT_TRUE(upsilon0_identity(vs, corrupted_derivative_constant).passed);
  const Polynomial v = fixtures::quadratic(1);
  EXPECT_FALSE(assemble_upsilon(v, 1, corrupted_derivative_constant)[1] == assemble_upsilon(v, 1)[1]);
}

TEST(Validate, GradingSummaryOnRandomPotentials) {
  const GradingSummary g = grading_summary(random_potentials(11, 10));
  EXPECT_EQ(g.operators, 60);
  EXPECT_EQ(g.support_violations, 0);
  EXPECT_EQ(g.degree_violations, 0);
  EXPECT_EQ(g.parity_violations, 0);
  EXPECT_EQ(g.derived_sdegree_violations, 0);
  // The "degree at most 2r" bound fails already for e_{2,0} = V^2 - Delta V/2 + s x.grad V.
  EXPECT_GT(g.stated_sdegree_violations, 0);
  EXPECT_FALSE(g.first_stated_violation.empty());
}

TEST(Validate, InvariantConsistency) {
  const Check c = invariant_consistency(fixtures::all_polynomial(2), {0.5, 2.0});
  EXPECT_TRUE(c.passed) << c.detail;
  EXPECT_LE(c.measured, 1e-10);
}

TEST(Validate, RandomPotentialsAreDeterministic) {
  const auto a = random_potentials(5, 6);
  const auto b = random_potentials(5, 6);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k], b[k]);
    EXPECT_EQ(a[k].degree(), 1 + static_cast<int>(k) % 3);
  }
}
