#pragma once

#include <cmath>
#include <numbers>

#include "hkexp/gaussian_laurent.hpp"

namespace hkexp {

/// Exact value of a Gaussian integral: pi^{n/2} s^{-n/2} * sum_k a_k s^k.
struct GaussianIntegral {
  int dim = 1;
  SLaurent coeffs;

  double eval(double s) const {
    return std::pow(std::numbers::pi / s, 0.5 * dim) * coeffs.eval(s);
  }
  bool operator==(const GaussianIntegral&) const = default;
  GaussianIntegral& operator+=(const GaussianIntegral& o) {
    require_same_dim(dim, o.dim, "GaussianIntegral +");
    coeffs += o.coeffs;
    return *this;
  }
};

/// int x^delta e^{-s|x|^2} dx, exactly. Odd monomials integrate to zero.
inline GaussianIntegral gaussian_moment(const MultiIndex& delta) {
  GaussianIntegral out{delta.dim(), {}};
  if (!delta.is_even()) return out;
  Rational c = 1;
  for (int r = 0; r < delta.dim(); ++r) {
    c *= Rational(odd_double_factorial(static_cast<unsigned long>(delta[r])));
    c /= Rational(Integer(1) << static_cast<unsigned long>(delta[r] / 2));
  }
  out.coeffs.add(-delta.order() / 2, c);
  return out;
}

/// int P(x) e^{-s|x|^2} dx for symbolic s.
inline GaussianIntegral gaussian_integral(const Polynomial& p) {
  GaussianIntegral out{p.dim(), {}};
  for (const auto& [a, c] : p.terms()) {
    GaussianIntegral m = gaussian_moment(a);
    out.coeffs += m.coeffs * c;
  }
  return out;
}

/// int e^{-s|x|^2} sum_j s^j P_j(x) dx for symbolic s.
inline GaussianIntegral gaussian_integral(const GaussianLaurent& g) {
  GaussianIntegral out{g.dim(), {}};
  for (const auto& [j, p] : g.terms()) out.coeffs += gaussian_integral(p).coeffs * SLaurent::monomial(j);
  return out;
}

inline double gaussian_integral(const Polynomial& p, double s) { return gaussian_integral(p).eval(s); }

/// Average of u^delta over the unit sphere S^{n-1} (the two-point set {+-1} when n = 1):
///   prod_i (delta_i - 1)!! / (n (n+2) ... (n + |delta| - 2))  for even delta, else 0.
inline Rational sphere_average(const MultiIndex& delta) {
  if (!delta.is_even()) return 0;
  Rational num = 1;
  for (int r = 0; r < delta.dim(); ++r) num *= Rational(odd_double_factorial(static_cast<unsigned long>(delta[r])));
  Rational den = 1;
  for (int k = 0; k < delta.order() / 2; ++k) den *= delta.dim() + 2 * k;
  return num / den;
}

/// Area of the unit sphere S^{n-1}; 2 for n = 1 (counting measure on {+-1}).
inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Area |S_r| of the sphere of radius r in R^n.
inline double sphere_area(int n, double r) { return unit_sphere_area(n) * std::pow(r, n - 1); }

/// int_{|x| = r} P dsigma via exact monomial averages.
inline double sphere_integral(const Polynomial& p, double r) {
  const int n = p.dim();
  double sum = 0.0;
  for (const auto& [a, c] : p.terms()) {
    Rational avg = sphere_average(a);
    if (avg == 0) continue;
    sum += Rational(c * avg).get_d() * std::pow(r, a.order());
  }
  return sum * sphere_area(n, r);
}

/// int_0^inf r^k e^{-s r^2} dr = Gamma((k+1)/2) / (2 s^{(k+1)/2}), k > -1.
inline double radial_gaussian_moment(double k, double s) {
  return 0.5 * std::tgamma(0.5 * (k + 1.0)) * std::pow(s, -0.5 * (k + 1.0));
}

}  // namespace hkexp
