#pragma once

#include <random>
#include <vector>

#include "hkexp/diff_op.hpp"
#include "hkexp/polynomial.hpp"

namespace hkexp::testkit {

/// Random polynomial with small integer/half-integer coefficients.
inline Polynomial random_polynomial(std::mt19937& rng, int dim, int max_degree, int max_terms = 4) {
  std::uniform_int_distribution<int> coeff(-3, 3);
  std::uniform_int_distribution<int> den(1, 2);
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::uniform_int_distribution<int> nterms(1, max_terms);
  Polynomial p(dim);
  const int k = nterms(rng);
  for (int t = 0; t < k; ++t) {
    MultiIndex a(dim);
    int left = deg(rng);
    for (int r = 0; r < dim && left > 0; ++r) {
      std::uniform_int_distribution<int> take(0, left);
      a[r] = (r == dim - 1) ? left : take(rng);
      left -= a[r];
    }
    p.add_term(a, rational(coeff(rng), den(rng)));
  }
  return p;
}

/// Random polynomial that is guaranteed to be nonzero and of exact degree max_degree.
inline Polynomial random_potential(std::mt19937& rng, int dim, int degree) {
  Polynomial p = random_polynomial(rng, dim, degree, 3);
  p.add_term(MultiIndex::unit(dim, 0, degree), 1);
  if (p.degree() != degree) p.add_term(MultiIndex::unit(dim, dim - 1, degree), 1);
  return p;
}

inline DiffOp random_diff_op(std::mt19937& rng, int dim, int max_order, int max_coeff_degree) {
  std::uniform_int_distribution<int> nterms(1, 3);
  std::uniform_int_distribution<int> ord(0, max_order);
  DiffOp d(dim);
  const int k = nterms(rng);
  for (int t = 0; t < k; ++t) {
    MultiIndex a(dim);
    int left = ord(rng);
    for (int r = 0; r < dim && left > 0; ++r) {
      std::uniform_int_distribution<int> take(0, left);
      a[r] = (r == dim - 1) ? left : take(rng);
      left -= a[r];
    }
    d.add_term(a, random_polynomial(rng, dim, max_coeff_degree, 2));
  }
  return d;
}

/// All monomials x^a with |a| <= max_degree.
inline std::vector<Polynomial> monomial_basis(int dim, int max_degree) {
  std::vector<Polynomial> out;
  for (int d = 0; d <= max_degree; ++d)
    for_each_of_order(dim, d, [&](const MultiIndex& a) { out.push_back(Polynomial::monomial(a)); });
  return out;
}

/// Operator equality tested by action on a monomial basis.
inline bool same_action(const DiffOp& a, const DiffOp& b, int max_degree) {
  for (const auto& p : monomial_basis(a.dim(), max_degree))
    if (!(op_apply(a, p) == op_apply(b, p))) return false;
  return true;
}

}  // namespace hkexp::testkit
