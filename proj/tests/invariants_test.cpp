#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hkexp/fixtures.hpp"
#include "hkexp/invariants.hpp"
#include "test_support.hpp"

using namespace hkexp;
using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr double kPi = std::numbers::pi;

Polynomial x_pow(int k) { return Polynomial::monomial({k}); }

double quad1(const std::function<double(double)>& f) {
  return gauss_kronrod<double, 61>::integrate(f, -12.0, 12.0, 20, 1e-14);
}

double quad2(const std::function<double(double, double)>& f) {
  return gauss_kronrod<double, 61>::integrate(
      [&](double y) { return gauss_kronrod<double, 61>::integrate([&](double x) { return f(x, y); }, -9.0, 9.0, 15, 1e-14); },
      -9.0, 9.0, 15, 1e-14);
}

/// Quadrature of P e^{-s|x|^2} in n = 1 or 2.
double gaussian_quadrature(const Polynomial& p, double s) {
  if (p.dim() == 1)
    return quad1([&](double x) { return p.eval(std::span<const double>(&x, 1)) * std::exp(-s * x * x); });
  return quad2([&](double x, double y) {
    const std::array<double, 2> pt{x, y};
    return p.eval(pt) * std::exp(-s * (x * x + y * y));
  });
}

void expect_relative(double got, double want, double tol) {
  EXPECT_NEAR(got, want, tol * std::max(1.0, std::abs(want)));
}

/// Rotation by the Pythagorean angle (3/5, 4/5) acting on coordinates (i, j) of R^n, row-major.
std::vector<Rational> rational_rotation(int n, int i, int j) {
  std::vector<Rational> m(static_cast<std::size_t>(n * n), Rational(0));
  for (int r = 0; r < n; ++r) m[r * n + r] = 1;
  m[i * n + i] = rational(3, 5);
  m[j * n + j] = rational(3, 5);
  m[i * n + j] = rational(-4, 5);
  m[j * n + i] = rational(4, 5);
  return m;
}

std::vector<Rational> compose(int n, const std::vector<Rational>& a, const std::vector<Rational>& b) {
  std::vector<Rational> out(static_cast<std::size_t>(n * n), Rational(0));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      for (int k = 0; k < n; ++k) out[r * n + c] += a[r * n + k] * b[k * n + c];
  return out;
}

}  // namespace

TEST(GaussianIntegral, Examples) {
  EXPECT_NEAR(gaussian_integral(Polynomial::constant(1, 1), 0.7), std::sqrt(kPi / 0.7), 1e-15);
  EXPECT_EQ(gaussian_integral(x_pow(1)).coeffs.is_zero(), true);
  EXPECT_NEAR(gaussian_integral(x_pow(2), 1.0), std::sqrt(kPi) / 2, 1e-15);
  EXPECT_NEAR(gaussian_integral(x_pow(2), 1.0), gaussian_quadrature(x_pow(2), 1.0), 1e-12);
}

TEST(InvariantTriple, ConstantPotential) {
  const Rational c = rational(3, 2);
  const double s = 0.8, g = std::sqrt(kPi / s);
  const InvariantTriple t = invariant_triple(Polynomial::constant(1, c), s);
  EXPECT_NEAR(t.i1, 1.5 * g, 1e-14);
  EXPECT_NEAR(t.i2, 2.25 * g, 1e-14);
  EXPECT_NEAR(t.i3, 3.375 * g, 1e-14);
}

TEST(InvariantTriple, LinearPotential) {
  const InvariantTriple t = invariant_triple(x_pow(1), 1.0);
  EXPECT_EQ(t.i1, 0.0);
  EXPECT_NEAR(t.i2, std::sqrt(kPi) / 2, 1e-15);
  EXPECT_EQ(t.i3, 0.0);
}

TEST(InvariantTriple, QuadraticThirdInvariantHasLaplacianTerm) {
  // V = x^2: V^3 - V V'' = x^6 - 2 x^2, so I3 = int x^6 e - 2 I1.
  const double s = 0.6;
  const InvariantTriple t = invariant_triple(x_pow(2), s);
  EXPECT_NEAR(t.i3, gaussian_integral(x_pow(6), s) - 2.0 * t.i1, 1e-13);
}

TEST(InvariantTriple, FixturesMatchQuadrature) {
  for (int n = 1; n <= 2; ++n)
    for (const auto& v : fixtures::all_polynomial(n))
      for (double s : {0.5, 1.3}) {
        const InvariantTriple t = invariant_triple(v, s);
        expect_relative(t.i1, gaussian_quadrature(v, s), 1e-8);
        expect_relative(t.i2, gaussian_quadrature(v * v, s), 1e-8);
        expect_relative(t.i3, gaussian_quadrature(third_invariant_density(v), s), 1e-8);
      }
}

TEST(InvariantTriple, SecondInvariantPositive) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Polynomial v = testkit::random_polynomial(rng, 1 + trial % 3, 3);
    for (double s : {0.1, 1.0, 10.0}) {
      const double i2 = invariant_triple(v, s).i2;
      if (v.is_zero())
        EXPECT_EQ(i2, 0.0);
      else
        EXPECT_GT(i2, 0.0);
    }
  }
  EXPECT_EQ(invariant_triple(Polynomial(2), 1.0).i2, 0.0);
}

TEST(InvariantTriple, RotationInvariantExactly) {
  std::mt19937 rng(5);
  const auto r2 = rational_rotation(2, 0, 1);
  const auto r3 = compose(3, rational_rotation(3, 0, 1), rational_rotation(3, 1, 2));
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 2;
    const auto& rot = n == 2 ? r2 : r3;
    const Polynomial v = testkit::random_polynomial(rng, n, 4, 5);
    const Polynomial vr = v.compose_linear(rot);
    EXPECT_EQ(invariant_triple(vr), invariant_triple(v));
  }
}

TEST(InvariantTriple, RejectsNonPositiveS) { EXPECT_THROW(invariant_triple(x_pow(1), 0.0), DomainError); }

TEST(SphereFunctionals, LinearOnUnitCircle) {
  const SphereFunctionals f = sphere_functionals(fixtures::linear(2), 1.0);
  EXPECT_NEAR(f.m1, 0.0, 1e-15);
  EXPECT_NEAR(f.m2, kPi, 1e-14);
  EXPECT_NEAR(f.v_lap, f.m2, 1e-14);
}

TEST(SphereFunctionals, LinearDegreeOneEigenvalue) {
  for (int n = 2; n <= 3; ++n)
    for (double r : {0.5, 1.0, 2.0}) {
      const SphereFunctionals f = sphere_functionals(fixtures::linear(n), r);
      EXPECT_NEAR(f.v_lap, (n - 1) / (r * r) * f.m2, 1e-12 * f.m2);
    }
}

TEST(SphereFunctionals, RadialPotential) {
  for (double r : {0.5, 1.7}) {
    const SphereFunctionals f = sphere_functionals(fixtures::quadratic(2), r);
    EXPECT_NEAR(f.m1, 2 * kPi * r * r * r, 1e-12);
    EXPECT_NEAR(f.m2, 2 * kPi * r * std::pow(r, 4), 1e-12);
    EXPECT_NEAR(f.m1 * f.m1, f.area * f.m2, 1e-10);
    EXPECT_NEAR(f.v_lap, 0.0, 1e-12);
    EXPECT_NEAR(f.v_dr, 2.0 / r * f.m2, 1e-12);
  }
}

TEST(SphereFunctionals, TwoPointSetInOneDimension) {
  const SphereFunctionals f = sphere_functionals(x_pow(2) + x_pow(1), 2.0);
  EXPECT_NEAR(f.area, 2.0, 1e-15);
  EXPECT_NEAR(f.m1, (4 + 2) + (4 - 2), 1e-13);
  EXPECT_NEAR(f.m2, 36 + 4, 1e-12);
  EXPECT_NEAR(f.v_lap, 0.0, 1e-15);
}

TEST(SphereFunctionals, NumericPathMatchesExact) {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Polynomial v = testkit::random_polynomial(rng, 2, 4, 5);
    const PlanarPotential pv = [&](double x, double y) {
      const std::array<double, 2> p{x, y};
      return v.eval(p);
    };
    for (double r : {0.6, 1.4}) {
      const SphereFunctionals a = sphere_functionals(v, r);
      const SphereFunctionals b = sphere_functionals(pv, r);
      for (auto [x, y] : {std::pair{a.m1, b.m1}, {a.m2, b.m2}, {a.v_dr, b.v_dr}, {a.dr_dr, b.dr_dr}, {a.v_lap, b.v_lap}})
        EXPECT_NEAR(x, y, 1e-6 * std::max(1.0, std::abs(x)));
    }
  }
}

TEST(SphereFunctionals, QuadratureOracle) {
  const Polynomial v = fixtures::odd_cubic(2) + fixtures::quadratic(2);
  const double r = 1.3;
  const double m2 = gauss_kronrod<double, 61>::integrate(
      [&](double th) {
        const std::array<double, 2> p{r * std::cos(th), r * std::sin(th)};
        const double val = v.eval(p);
        return val * val * r;
      },
      0.0, 2 * kPi, 10, 1e-14);
  EXPECT_NEAR(sphere_functionals(v, r).m2, m2, 1e-10);
}

TEST(SphereFunctionals, RejectsNonPositiveRadius) {
  EXPECT_THROW(sphere_functionals(fixtures::linear(2), 0.0), DomainError);
  EXPECT_THROW(sphere_functionals(fixtures::linear(2), -1.0), DomainError);
}

TEST(CauchySchwarz, HoldsWithEqualityExactlyWhenConstant) {
  std::mt19937 rng(7);
  std::vector<Polynomial> vs = fixtures::all_polynomial(2);
  for (int trial = 0; trial < 10; ++trial) vs.push_back(testkit::random_polynomial(rng, 2, 4, 4));
  for (const auto& v : vs)
    for (double r : {0.5, 1.0, 2.5}) {
      const SphereFunctionals f = sphere_functionals(v, r);
      EXPECT_LE(f.m1 * f.m1, f.area * f.m2 * (1 + 1e-12));
      const ConstancyVerdict c = constancy_detector(v, r);
      const bool radial = v.is_zero() || v == fixtures::quadratic(2) || v == fixtures::quartic(2) || v.degree() == 0;
      EXPECT_EQ(c.constant, radial) << v << " at r = " << r;
    }
}

TEST(ConstancyDetector, RadialFixtures) {
  for (double r : {0.3, 1.0, 2.2}) {
    const ConstancyVerdict q = constancy_detector(fixtures::quadratic(2), r);
    EXPECT_TRUE(q.constant);
    EXPECT_NEAR(q.value, r * r, 1e-12);
    const ConstancyVerdict q4 = constancy_detector(fixtures::quartic(3), r);
    EXPECT_TRUE(q4.constant);
    EXPECT_NEAR(q4.value, std::pow(r, 4), 1e-11);
  }
}

TEST(ConstancyDetector, RejectsLinear) {
  const ConstancyVerdict c = constancy_detector(fixtures::linear(2), 1.0);
  EXPECT_FALSE(c.constant);
  EXPECT_NEAR(c.defect, 2 * kPi * kPi, 1e-12);
}

TEST(ConstancyDetector, NumericRadialBump) {
  const fixtures::RadialBump bump;
  EXPECT_TRUE(constancy_detector(bump, 1.0).constant);
  const PlanarPotential tilted = [&](double x, double y) { return bump(x, y) * (1 + 0.1 * x); };
  EXPECT_FALSE(constancy_detector(tilted, 1.0).constant);
}

TEST(ConstancyDetector, RejectsBadInput) {
  EXPECT_THROW(constancy_detector(fixtures::linear(2), 1.0, 0.0), DomainError);
  EXPECT_THROW(constancy_detector(x_pow(2), 1.0), DomainError);
}

TEST(OddLinearDetector, EqualityForLinear) {
  for (double r : {0.5, 1.0, 1.3}) {
    const OddLinearVerdict d = odd_linear_detector(fixtures::linear(2), r);
    EXPECT_TRUE(d.in_class);
    EXPECT_NEAR(d.lhs, 2 * kPi * kPi * std::pow(r, 4), 1e-11);
    EXPECT_NEAR(d.rhs, 2 * kPi * kPi * std::pow(r, 4), 1e-11);
    EXPECT_NEAR(d.chi, 1.0 / r, 1e-13);
  }
  EXPECT_TRUE(odd_linear_detector(fixtures::linear(3), 0.8).in_class);
}

TEST(OddLinearDetector, StrictForCubic) {
  for (double r : {0.5, 1.0, 2.0}) {
    const OddLinearVerdict d = odd_linear_detector(fixtures::odd_cubic(2), r);
    EXPECT_FALSE(d.in_class);
    EXPECT_GT(d.gap, 1e-3 * d.lhs);
    EXPECT_NEAR(d.chi, 3.0 / r, 1e-12);
  }
}

TEST(OddLinearDetector, InequalityHoldsForRandomOddPotentials) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Polynomial v(2);
    const Polynomial raw = testkit::random_polynomial(rng, 2, 5, 6);
    for (const auto& [a, c] : raw.terms())
      if (a.order() % 2 == 1) v.add_term(a, c);
    if (v.is_zero()) continue;
    const OddLinearVerdict d = odd_linear_detector(v, 1.1);
    EXPECT_GE(d.gap, -1e-12 * d.lhs);
  }
}

TEST(OddLinearDetector, NumericRadialProfile) {
  const fixtures::RadialTimesLinear v{2};
  for (double r : {0.5, 1.0, 1.5}) {
    const OddLinearVerdict d = odd_linear_detector(v, r);
    EXPECT_TRUE(d.in_class);
    EXPECT_NEAR(d.chi, 2.0 / r, 1e-6);
  }
}

TEST(OddLinearDetector, RejectsBadInput) {
  EXPECT_THROW(odd_linear_detector(fixtures::quadratic(2), 1.0), DomainError);
  EXPECT_THROW(odd_linear_detector(Polynomial(2), 1.0), DomainError);
  EXPECT_THROW(odd_linear_detector(fixtures::linear(1), 1.0), DomainError);
  const PlanarPotential zero = [](double, double) { return 0.0; };
  EXPECT_THROW(odd_linear_detector(zero, 1.0), DomainError);
}

TEST(SupportAnnulus, RadialBumpRecovered) {
  const fixtures::RadialBump bump{0.5, 1.5};
  const SupportAnnulus s = support_annulus(bump, 3.0, 300);
  ASSERT_FALSE(s.empty);
  EXPECT_LE(s.inner_bracket, 0.5);
  EXPECT_GE(s.inner, 0.5);
  EXPECT_LE(s.outer, 1.5);
  EXPECT_GE(s.outer_bracket, 1.5);
  EXPECT_NEAR(s.inner - s.inner_bracket, s.resolution, 1e-12);
  EXPECT_NEAR(s.outer_bracket - s.outer, s.resolution, 1e-12);
}

TEST(SupportAnnulus, EmptyForZero) {
  EXPECT_TRUE(support_annulus([](double, double) { return 0.0; }, 2.0, 50).empty);
}

TEST(RadialFubini, MatchesCartesianInvariants) {
  for (int n = 1; n <= 3; ++n)
    for (const auto& v : fixtures::all_polynomial(n))
      for (double s : {0.4, 1.0, 2.5}) {
        const InvariantTriple a = invariant_triple(v, s);
        const InvariantTriple b = radial_fubini_triple(v, s);
        expect_relative(b.i1, a.i1, 1e-10);
        expect_relative(b.i2, a.i2, 1e-10);
        expect_relative(b.i3, a.i3, 1e-10);
      }
}

TEST(LaplacianDecomposition, SphericalAssemblyMatchesCartesian) {
  std::mt19937 rng(10);
  std::vector<Polynomial> vs;
  for (int n = 1; n <= 3; ++n) {
    for (const auto& v : fixtures::all_polynomial(n)) vs.push_back(v);
    for (int k = 0; k < 3; ++k) vs.push_back(testkit::random_polynomial(rng, n, 4, 5));
  }
  for (const auto& v : vs) {
    const LaplacianDecomposition d = laplacian_decomposition(v, 0.7);
    expect_relative(d.total(), d.cartesian, 1e-10);
  }
}

TEST(Report, JsonAndCsv) {
  const InvariantReport rep = invariant_report(fixtures::quadratic(2), {0.5, 1.0}, {1.0, 2.0, 3.0});
  const nlohmann::json j = to_json(rep);
  EXPECT_EQ(j["invariants"].size(), 2u);
  EXPECT_EQ(j["spheres"].size(), 3u);
  EXPECT_DOUBLE_EQ(j["invariants"][0]["I1"].get<double>(), rep.invariants[0].i1);
  std::ostringstream a, b;
  write_invariants_csv(a, rep);
  write_spheres_csv(b, rep);
  EXPECT_EQ(a.str().rfind("s,I1,I2,I3\n", 0), 0u);
  const std::string spheres = b.str();
  EXPECT_EQ(std::count(spheres.begin(), spheres.end(), '\n'), 4);
  EXPECT_THROW(invariant_report(fixtures::quadratic(2), {0.0}, {}), DomainError);
}
