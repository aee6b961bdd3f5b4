#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hkexp/invariants.hpp"
#include "hkexp/polynomial.hpp"

namespace hkexp::fixtures {

/// Names of the polynomial fixtures, in a fixed order.
inline const std::vector<std::string>& polynomial_names() {
  static const std::vector<std::string> names{"zero", "linear", "quadratic", "quartic", "odd-cubic"};
  return names;
}

inline Polynomial zero(int n) { return Polynomial(n); }
inline Polynomial linear(int n) { return Polynomial::coordinate(n, 0); }
inline Polynomial quadratic(int n) { return Polynomial::radius_squared(n); }
inline Polynomial quartic(int n) { return pow(Polynomial::radius_squared(n), 2); }
inline Polynomial odd_cubic(int n) { return Polynomial::monomial(MultiIndex::unit(n, 0, 3)); }

/// Polynomial fixture by name; throws DomainError for unknown names (including the numeric "radial-bump").
inline Polynomial by_name(const std::string& name, int n) {
  if (name == "zero") return zero(n);
  if (name == "linear") return linear(n);
  if (name == "quadratic") return quadratic(n);
  if (name == "quartic") return quartic(n);
  if (name == "odd-cubic") return odd_cubic(n);
  throw DomainError("unknown polynomial fixture '" + name + "'");
}

inline std::vector<Polynomial> all_polynomial(int n) {
  std::vector<Polynomial> out;
  for (const auto& name : polynomial_names()) out.push_back(by_name(name, n));
  return out;
}

/// Radial bump on the plane supported in the annulus a <= |x| <= b:
///   (|x|^2 - a^2)^2 (b^2 - |x|^2)^2 inside, 0 outside.
struct RadialBump {
  double a = 0.5;
  double b = 1.5;

  double operator()(double x, double y) const {
    const double r2 = x * x + y * y;
    if (r2 <= a * a || r2 >= b * b) return 0.0;
    const double p = (r2 - a * a) * (b * b - r2);
    return p * p;
  }
};

/// f(r) x_1 / r with f(r) = r^k: an odd pointwise potential whose radial log-derivative is k / r.
struct RadialTimesLinear {
  int k = 2;

  double operator()(double x, double y) const {
    const double r = std::hypot(x, y);
    if (r == 0.0) return 0.0;
    return std::pow(r, k) * x / r;
  }
};

}  // namespace hkexp::fixtures
