#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hkexp/gaussian_laurent.hpp"
#include "hkexp/graded_op.hpp"

namespace hkexp {

/// The m-th operator of the commutator recursion
///   X_0 = I,  X_m = hbar^2 V X_{m-1} + [A, X_{m-1}],
///   A = -hbar^2 Delta/2 + |x|^2/2 - n hbar/2,
/// stored with its index so that the hbar-grading can be checked:
///   X_m = hbar^m sum_{1 <= i <= m, i = m mod 2} hbar^i X_m^{i-1},  deg X_m^{i-1} <= i - 1.
struct KantorovitzTerm {
  int m = 0;
  HGradedOp op;
};

inline void check_grading(const HGradedOp& x, int m) {
  if (m < 0) throw GradingViolation("negative recursion index");
  if (m == 0) {
    if (!(x == HGradedOp::single(0, DiffOp::identity(x.dim()))))
      throw GradingViolation("X_0 must be the identity");
    return;
  }
  for (const auto& [g, op] : x.grades()) {
    const int i = g - m;
    if (i < 1 || i > m || (i - m) % 2 != 0)
      throw GradingViolation("X_" + std::to_string(m) + " has a component at hbar^" + std::to_string(g));
    if (op.degree() > i - 1)
      throw GradingViolation("X_" + std::to_string(m) + " component at hbar^" + std::to_string(g) +
                             " has order " + std::to_string(op.degree()) + " > " + std::to_string(i - 1));
  }
}

inline KantorovitzTerm identity_term(int dim) { return {0, HGradedOp::single(0, DiffOp::identity(dim))}; }

/// One step of the recursion in the form
///   X_m = hbar^2 V X_{m-1} - hbar^2 [Delta/2, X_{m-1}] + [|x|^2/2, X_{m-1}].
inline KantorovitzTerm next_X(const KantorovitzTerm& prev, const Polynomial& potential) {
  const int n = prev.op.dim();
  require_same_dim(n, potential.dim(), "next_X");
  check_grading(prev.op, prev.m);

  const DiffOp half_laplacian = DiffOp::laplacian(n) * rational(1, 2);
  const DiffOp half_r2 = DiffOp::multiplication(Polynomial::radius_squared(n) * rational(1, 2));

  HGradedOp out(n);
  for (const auto& [g, x] : prev.op.grades()) {
    out.add(g + 2, x.left_multiply(potential));
    out.add(g + 2, -op_commutator(half_laplacian, x));
    out.add(g, op_commutator(half_r2, x));
  }
  return {prev.m + 1, std::move(out)};
}

/// X_0 .. X_{m_max}.
inline std::vector<KantorovitzTerm> x_chain(const Polynomial& potential, int m_max) {
  std::vector<KantorovitzTerm> chain{identity_term(potential.dim())};
  for (int m = 1; m <= m_max; ++m) chain.push_back(next_X(chain.back(), potential));
  return chain;
}

/// A = -hbar^2 Delta/2 + |x|^2/2 - n hbar/2 as a graded operator.
inline HGradedOp free_generator(int dim) {
  HGradedOp a(dim);
  a.add(0, DiffOp::multiplication(Polynomial::radius_squared(dim) * rational(1, 2)));
  a.add(1, DiffOp::identity(dim) * rational(-dim, 2));
  a.add(2, DiffOp::laplacian(dim) * rational(-1, 2));
  return a;
}

/// H = A + hbar^2 V.
inline HGradedOp perturbed_generator(const Polynomial& potential) {
  HGradedOp h = free_generator(potential.dim());
  h.add(2, DiffOp::multiplication(potential));
  return h;
}

/// X_m = sum_j (-1)^j C(m, j) H^{m-j} A^j, built independently of the recursion.
inline HGradedOp closed_form_X(int m, const Polynomial& potential) {
  if (m < 0) throw DomainError("closed_form_X: m must be non-negative");
  const int n = potential.dim();
  const HGradedOp a = free_generator(n);
  const HGradedOp h = perturbed_generator(potential);
  std::vector<HGradedOp> h_pow{HGradedOp::single(0, DiffOp::identity(n))};
  std::vector<HGradedOp> a_pow{HGradedOp::single(0, DiffOp::identity(n))};
  for (int k = 1; k <= m; ++k) {
    h_pow.push_back(h_pow.back() * h);
    a_pow.push_back(a_pow.back() * a);
  }
  HGradedOp out(n);
  for (int j = 0; j <= m; ++j) {
    Rational c(binomial(static_cast<unsigned long>(m), static_cast<unsigned long>(j)));
    if (j % 2 == 1) c = -c;
    out += (h_pow[m - j] * a_pow[j]) * c;
  }
  return out;
}

/// Constant c_mu in  d^mu exp(-|x-y|^2 / (4 hbar^2 s)) |_{x=y} = c_mu hbar^{-|mu|} s^{-|mu|/2}.
using DerivativeConstants = std::function<Rational(const MultiIndex&)>;

/// c_mu = (-1/4)^{|nu|} mu!/nu! for mu = 2 nu, and 0 when mu is not even.
inline Rational mehler_derivative_constant(const MultiIndex& mu) {
  if (!mu.is_even()) return 0;
  const MultiIndex nu = mu.half();
  Rational c = rational_pow(rational(-1, 4), static_cast<unsigned>(nu.order()));
  return c * Rational(multi_factorial(mu)) / Rational(multi_factorial(nu));
}

namespace detail {

/// d^k/dw^k exp(-s w^2/4) = exp(-s w^2/4) q_k(w, s); q_k stored as (s-exp, w-exp) -> coefficient.
inline std::vector<std::map<std::pair<int, int>, Rational>> gaussian_derivative_polys(int k_max) {
  std::vector<std::map<std::pair<int, int>, Rational>> q(static_cast<std::size_t>(k_max) + 1);
  q[0][{0, 0}] = 1;
  for (int k = 0; k < k_max; ++k) {
    auto& next = q[k + 1];
    for (const auto& [key, c] : q[k]) {
      const auto [se, we] = key;
      if (we > 0) next[{se, we - 1}] += c * we;
      next[{se + 1, we + 1}] -= c / 2;
    }
    for (auto it = next.begin(); it != next.end();) it = it->second == 0 ? next.erase(it) : std::next(it);
  }
  return q;
}

/// d_x^nu exp(-s|x+y|^2/4) at x = y, divided by exp(-s|x|^2): a polynomial in (x, s).
class SumGaussianDerivatives {
 public:
  SumGaussianDerivatives(int dim, int max_order) : dim_(dim), q_(gaussian_derivative_polys(max_order)) {}

  const GaussianLaurent& operator()(const MultiIndex& nu) {
    auto it = cache_.find(nu);
    if (it != cache_.end()) return it->second;
    GaussianLaurent acc = GaussianLaurent::term(0, Polynomial::constant(dim_, 1));
    for (int r = 0; r < dim_; ++r) {
      GaussianLaurent factor(dim_);
      for (const auto& [key, c] : q_[static_cast<std::size_t>(nu[r])]) {
        const auto [se, we] = key;
        // w = x + y = 2 x on the diagonal.
        factor.add(se, Polynomial::monomial(MultiIndex::unit(dim_, r, we), c * Rational(Integer(1) << we)));
      }
      GaussianLaurent next(dim_);
      for (const auto& [e, p] : factor.terms()) next += (acc * p).times_s(e);
      acc = std::move(next);
    }
    return cache_.emplace(nu, std::move(acc)).first->second;
  }

 private:
  int dim_;
  std::vector<std::map<std::pair<int, int>, Rational>> q_;
  std::map<MultiIndex, GaussianLaurent> cache_;
};

}  // namespace detail

/// X e(x, y, s, hbar)|_{x=y} for the Mehler exponential
///   e = exp(-|x-y|^2 / (4 hbar^2 s) - s|x+y|^2/4),
/// exactly, as a series in hbar with GaussianLaurent coefficients. Terms above
/// max_order are skipped.
inline HSeries diagonal_eval(const KantorovitzTerm& x, int max_order,
                             const DerivativeConstants& c_mu = mehler_derivative_constant) {
  check_grading(x.op, x.m);
  const int n = x.op.dim();
  int max_deriv = 0;
  for (const auto& [g, op] : x.op.grades()) max_deriv = std::max(max_deriv, op.degree());
  detail::SumGaussianDerivatives sum_derivs(n, std::max(max_deriv, 0));

  HSeries out(n, max_order);
  for (const auto& [g, op] : x.op.grades()) {
    for (const auto& [alpha, a] : op.terms()) {
      for_each_below(alpha, [&](const MultiIndex& mu) {
        if (!mu.is_even()) return;
        const int h_exp = g - mu.order();
        if (h_exp > max_order) return;
        const Rational c = c_mu(mu);
        if (c == 0) return;
        const Rational k = c * Rational(multi_binomial(alpha, mu));
        const GaussianLaurent& q = sum_derivs(alpha - mu);
        out.add(h_exp, ((q * a) * k).times_s(-mu.order() / 2));
      });
    }
  }
  return out;
}

inline HSeries diagonal_eval(const KantorovitzTerm& x) {
  return diagonal_eval(x, 1 << 20);
}

/// Heat time as a series in hbar:
///   t(s, hbar) = (1/hbar) log((1 + hbar s)/(1 - hbar s)) = sum_k 2 s^{2k+1} hbar^{2k} / (2k + 1).
inline ScalarSeries heat_time_series(int order) {
  ScalarSeries t;
  for (int k = 0; 2 * k <= order; ++k) t[2 * k] = SLaurent::monomial(2 * k + 1, rational(2, 2 * k + 1));
  return t;
}

/// Normalized on-diagonal defect
///   D = [e^{-tA}(x,x) - e^{-tH}(x,x)] / P(s, hbar),  P = (4 pi hbar^2 s)^{-n/2} (1 + hbar s)^n,
/// through hbar-order `order`, from
///   e^{-tH} = sum_m (-t)^m/m! X_m e^{-tA}.
inline HSeries heat_defect_series(const Polynomial& potential, int order,
                                  const DerivativeConstants& c_mu = mehler_derivative_constant) {
  if (order < 0) throw DomainError("heat_defect_series: negative order");
  const int n = potential.dim();
  // X_m e|_{x=y} starts at hbar^{m+1} (m odd) or hbar^{m+2} (m even).
  const int m_max = std::max(order - 1, 0);
  const ScalarSeries t = heat_time_series(order);

  HSeries defect(n, order);
  KantorovitzTerm x = identity_term(n);
  ScalarSeries t_pow{{0, SLaurent::monomial(0)}};
  Rational inv_factorial = 1;
  for (int m = 1; m <= m_max; ++m) {
    x = next_X(x, potential);
    t_pow = truncated_product(t_pow, t, order);
    inv_factorial /= m;
    HSeries diag = diagonal_eval(x, order, c_mu);
    const Rational sign = (m % 2 == 1) ? inv_factorial : -inv_factorial;
    ScalarSeries weighted;
    for (const auto& [k, p] : t_pow) weighted[k] = p * sign;
    defect += weighted * diag;
  }
  for (const auto& [k, g] : defect.coeffs()) {
    if (k % 2 != 0 || k < 2)
      throw InternalError("heat defect has a term at hbar^" + std::to_string(k));
  }
  return defect;
}

/// Upsilon_0 .. Upsilon_K with  D = hbar^2 sum_k hbar^{2k} Upsilon_k(s, x).
inline std::vector<GaussianLaurent> assemble_upsilon(const Polynomial& potential, int k_max,
                                                     const DerivativeConstants& c_mu = mehler_derivative_constant) {
  if (k_max < 0) throw DomainError("assemble_upsilon: K must be >= 0");
  const HSeries defect = heat_defect_series(potential, 2 * k_max + 2, c_mu);
  if (defect.truncation_order() != 2 * k_max + 2) throw InternalError("truncation order mismatch");
  std::vector<GaussianLaurent> out;
  for (int k = 0; k <= k_max; ++k) out.push_back(defect.coeff(2 * k + 2));
  return out;
}

}  // namespace hkexp
