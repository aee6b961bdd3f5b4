#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hkexp/kantorovitz.hpp"
#include "hkexp/moments.hpp"

namespace hkexp {

/// re + im * i with exact rational parts.
struct ComplexRational {
  Rational re = 0;
  Rational im = 0;

  ComplexRational() = default;
  ComplexRational(const Rational& r, const Rational& i = 0) : re(r), im(i) {}
  ComplexRational(long r) : re(r) {}

  /// i^k for any integer k.
  static ComplexRational i_pow(int k) {
    switch (((k % 4) + 4) % 4) {
      case 0: return {1, 0};
      case 1: return {0, 1};
      case 2: return {-1, 0};
      default: return {0, -1};
    }
  }

  bool is_zero() const { return re == 0 && im == 0; }
  bool is_real() const { return im == 0; }

  ComplexRational& operator+=(const ComplexRational& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  ComplexRational& operator-=(const ComplexRational& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  friend ComplexRational operator+(ComplexRational a, const ComplexRational& b) { return a += b; }
  friend ComplexRational operator-(ComplexRational a, const ComplexRational& b) { return a -= b; }
  friend ComplexRational operator*(const ComplexRational& a, const ComplexRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  ComplexRational operator-() const { return {-re, -im}; }
  bool operator==(const ComplexRational& o) const { return re == o.re && im == o.im; }
};

inline std::ostream& operator<<(std::ostream& os, const ComplexRational& c) {
  if (c.im == 0) return os << c.re;
  if (c.re == 0) return os << c.im << "i";
  return os << "(" << c.re << (c.im > 0 ? "+" : "") << c.im << "i)";
}

/// Polynomial in (x, xi) with coefficients in Q[i]: sum c_{a,b} xi^a x^b.
/// The full symbol of sum_a b_a(x) d^a is sum_a b_a(x) (i xi)^a, pairing D = -i d with xi.
class PhaseSymbol {
 public:
  struct Key {
    MultiIndex xi;
    MultiIndex x;
    auto operator<=>(const Key&) const = default;
  };
  using Terms = std::map<Key, ComplexRational>;

  PhaseSymbol() = default;
  explicit PhaseSymbol(int dim) : dim_(dim) { check_dim(dim); }

  /// A symbol without xi-dependence.
  static PhaseSymbol from_polynomial(const Polynomial& p) {
    PhaseSymbol out(p.dim());
    for (const auto& [b, c] : p.terms()) out.add_term(MultiIndex(p.dim()), b, c);
    return out;
  }

  int dim() const { return dim_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  /// Highest total xi-degree, -1 for the zero symbol.
  int xi_degree() const {
    int d = -1;
    for (const auto& [k, c] : terms_) d = std::max(d, k.xi.order());
    return d;
  }

  ComplexRational coeff(const MultiIndex& xi, const MultiIndex& x) const {
    auto it = terms_.find({xi, x});
    return it == terms_.end() ? ComplexRational{} : it->second;
  }

  void add_term(const MultiIndex& xi, const MultiIndex& x, const ComplexRational& c) {
    if (xi.dim() != dim_ || x.dim() != dim_) throw DimensionMismatch("PhaseSymbol term has wrong dimension");
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace({xi, x}, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  PhaseSymbol& operator+=(const PhaseSymbol& o) {
    require_same_dim(dim_, o.dim_, "PhaseSymbol +");
    for (const auto& [k, c] : o.terms_) add_term(k.xi, k.x, c);
    return *this;
  }
  PhaseSymbol& operator-=(const PhaseSymbol& o) {
    require_same_dim(dim_, o.dim_, "PhaseSymbol -");
    for (const auto& [k, c] : o.terms_) add_term(k.xi, k.x, -c);
    return *this;
  }
  friend PhaseSymbol operator+(PhaseSymbol a, const PhaseSymbol& b) { return a += b; }
  friend PhaseSymbol operator-(PhaseSymbol a, const PhaseSymbol& b) { return a -= b; }
  friend PhaseSymbol operator*(const PhaseSymbol& p, const ComplexRational& k) {
    PhaseSymbol out(p.dim_);
    if (k.is_zero()) return out;
    for (const auto& [key, c] : p.terms_) out.terms_.emplace(key, c * k);
    return out;
  }
  /// Multiplication by a function of x alone.
  friend PhaseSymbol operator*(const Polynomial& v, const PhaseSymbol& p) {
    require_same_dim(v.dim(), p.dim_, "Polynomial * PhaseSymbol");
    PhaseSymbol out(p.dim_);
    for (const auto& [b, cv] : v.terms())
      for (const auto& [key, c] : p.terms_) out.add_term(key.xi, key.x + b, c * ComplexRational(cv));
    return out;
  }
  bool operator==(const PhaseSymbol& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

  /// Terms of total xi-degree exactly d.
  PhaseSymbol xi_homogeneous_part(int d) const {
    PhaseSymbol out(dim_);
    for (const auto& [k, c] : terms_)
      if (k.xi.order() == d) out.terms_.emplace(k, c);
    return out;
  }

  PhaseSymbol d_x(int r) const { return differentiate(r, false); }
  PhaseSymbol d_xi(int r) const { return differentiate(r, true); }
  PhaseSymbol times_x(int r) const { return shift(r, false); }
  PhaseSymbol times_xi(int r) const { return shift(r, true); }

 private:
  PhaseSymbol differentiate(int r, bool in_xi) const {
    PhaseSymbol out(dim_);
    for (const auto& [k, c] : terms_) {
      const int e = in_xi ? k.xi[r] : k.x[r];
      if (e == 0) continue;
      Key nk = k;
      (in_xi ? nk.xi : nk.x)[r] -= 1;
      out.add_term(nk.xi, nk.x, c * ComplexRational(e));
    }
    return out;
  }
  PhaseSymbol shift(int r, bool in_xi) const {
    PhaseSymbol out(dim_);
    for (const auto& [k, c] : terms_) {
      Key nk = k;
      (in_xi ? nk.xi : nk.x)[r] += 1;
      out.terms_.emplace(nk, c);
    }
    return out;
  }

  int dim_ = 1;
  Terms terms_;
};

inline std::ostream& operator<<(std::ostream& os, const PhaseSymbol& p) {
  if (p.is_zero()) return os << "0";
  bool first = true;
  for (const auto& [k, c] : p.terms()) {
    os << (first ? "" : " + ") << c;
    for (int r = 0; r < p.dim(); ++r) {
      if (k.xi[r] > 0) os << "*xi" << (r + 1) << (k.xi[r] > 1 ? "^" + std::to_string(k.xi[r]) : "");
      if (k.x[r] > 0) os << "*x" << (r + 1) << (k.x[r] > 1 ? "^" + std::to_string(k.x[r]) : "");
    }
    first = false;
  }
  return os;
}

inline std::string to_string(const PhaseSymbol& p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

/// {"dim": n, "terms": [{"xi": [...], "x": [...], "num", "den", "ipow": 0..3}]}. A coefficient with
/// both real and imaginary parts is written as two terms (ipow 0 and ipow 1).
inline nlohmann::json to_json(const PhaseSymbol& p) {
  nlohmann::json out;
  out["dim"] = p.dim();
  out["terms"] = nlohmann::json::array();
  for (const auto& [k, c] : p.terms()) {
    for (int ipow : {0, 1}) {
      const Rational& part = ipow == 0 ? c.re : c.im;
      if (part == 0) continue;
      nlohmann::json t;
      t["xi"] = multi_index_to_json(k.xi);
      t["x"] = multi_index_to_json(k.x);
      write_rational(t, part);
      t["ipow"] = ipow;
      out["terms"].push_back(std::move(t));
    }
  }
  return out;
}

inline PhaseSymbol phase_symbol_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("terms"))
    throw FormatError("PhaseSymbol JSON needs \"dim\" and \"terms\"");
  const int dim = j.at("dim").get<int>();
  check_dim(dim);
  PhaseSymbol p(dim);
  for (const auto& t : j.at("terms")) {
    const int ipow = t.value("ipow", 0);
    if (ipow < 0 || ipow > 3) throw FormatError("ipow must be in 0..3");
    p.add_term(multi_index_from_json(t.at("xi"), dim), multi_index_from_json(t.at("x"), dim),
               ComplexRational(read_rational(t)) * ComplexRational::i_pow(ipow));
  }
  return p;
}

/// Symbol of unspecified potential V: sum c * xi^a x^g * prod_k d^{b_k} V, with the derivative
/// factors kept as a sorted list. Linear-in-V terms have one factor, quadratic ones two.
class GenericSymbol {
 public:
  struct Key {
    MultiIndex xi;
    MultiIndex x;
    std::vector<MultiIndex> dv;
    auto operator<=>(const Key&) const = default;
  };
  using Terms = std::map<Key, ComplexRational>;

  GenericSymbol() = default;
  explicit GenericSymbol(int dim) : dim_(dim) { check_dim(dim); }

  /// The symbol V itself.
  static GenericSymbol potential(int dim) {
    GenericSymbol out(dim);
    out.add_term({MultiIndex(dim), MultiIndex(dim), {MultiIndex(dim)}}, 1);
    return out;
  }

  int dim() const { return dim_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int xi_degree() const {
    int d = -1;
    for (const auto& [k, c] : terms_) d = std::max(d, k.xi.order());
    return d;
  }
  /// Largest number of V-factors in any term.
  int v_degree() const {
    int d = 0;
    for (const auto& [k, c] : terms_) d = std::max(d, static_cast<int>(k.dv.size()));
    return d;
  }

  void add_term(Key k, const ComplexRational& c) {
    if (c.is_zero()) return;
    std::sort(k.dv.begin(), k.dv.end());
    auto [it, inserted] = terms_.try_emplace(std::move(k), c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  GenericSymbol& operator+=(const GenericSymbol& o) {
    require_same_dim(dim_, o.dim_, "GenericSymbol +");
    for (const auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
  }
  friend GenericSymbol operator+(GenericSymbol a, const GenericSymbol& b) { return a += b; }
  friend GenericSymbol operator*(const GenericSymbol& p, const ComplexRational& k) {
    GenericSymbol out(p.dim_);
    if (k.is_zero()) return out;
    for (const auto& [key, c] : p.terms_) out.terms_.emplace(key, c * k);
    return out;
  }
  bool operator==(const GenericSymbol& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

  GenericSymbol xi_homogeneous_part(int d) const {
    GenericSymbol out(dim_);
    for (const auto& [k, c] : terms_)
      if (k.xi.order() == d) out.terms_.emplace(k, c);
    return out;
  }

  /// d/dx_r by the product rule over x^g and every V-factor.
  GenericSymbol d_x(int r) const {
    GenericSymbol out(dim_);
    for (const auto& [k, c] : terms_) {
      if (k.x[r] > 0) {
        Key nk = k;
        nk.x[r] -= 1;
        out.add_term(std::move(nk), c * ComplexRational(k.x[r]));
      }
      for (std::size_t f = 0; f < k.dv.size(); ++f) {
        Key nk = k;
        nk.dv[f][r] += 1;
        out.add_term(std::move(nk), c);
      }
    }
    return out;
  }
  GenericSymbol d_xi(int r) const {
    GenericSymbol out(dim_);
    for (const auto& [k, c] : terms_) {
      if (k.xi[r] == 0) continue;
      Key nk = k;
      nk.xi[r] -= 1;
      out.add_term(std::move(nk), c * ComplexRational(k.xi[r]));
    }
    return out;
  }
  GenericSymbol times_x(int r) const { return shift(r, false); }
  GenericSymbol times_xi(int r) const { return shift(r, true); }
  GenericSymbol times_potential() const {
    GenericSymbol out(dim_);
    for (const auto& [k, c] : terms_) {
      Key nk = k;
      nk.dv.push_back(MultiIndex(dim_));
      out.add_term(std::move(nk), c);
    }
    return out;
  }

  /// Substitute a concrete polynomial potential.
  PhaseSymbol specialize(const Polynomial& v) const {
    require_same_dim(dim_, v.dim(), "GenericSymbol::specialize");
    PhaseSymbol out(dim_);
    for (const auto& [k, c] : terms_) {
      Polynomial coeff = Polynomial::monomial(k.x);
      for (const auto& b : k.dv) coeff = coeff * v.derivative(b);
      for (const auto& [x, cx] : coeff.terms()) out.add_term(k.xi, x, c * ComplexRational(cx));
    }
    return out;
  }

 private:
  GenericSymbol shift(int r, bool in_xi) const {
    GenericSymbol out(dim_);
    for (const auto& [k, c] : terms_) {
      Key nk = k;
      (in_xi ? nk.xi : nk.x)[r] += 1;
      out.terms_.emplace(std::move(nk), c);
    }
    return out;
  }

  int dim_ = 1;
  Terms terms_;
};

/// Marker for "multiply by the unspecified potential".
struct GenericPotential {};

inline PhaseSymbol times_potential(const PhaseSymbol& p, const Polynomial& v) { return v * p; }
inline GenericSymbol times_potential(const GenericSymbol& p, GenericPotential) { return p.times_potential(); }

/// Symbol sigma_m = hbar^m sum_i hbar^i sigma_m^{i-1}, keyed by hbar-exponent like HGradedOp.
template <class S>
struct BasicGradedSymbol {
  int m = 0;
  int dim = 1;
  std::map<int, S> grades;

  void add(int g, const S& p) {
    if (p.is_zero()) return;
    auto [it, inserted] = grades.try_emplace(g, p);
    if (!inserted) {
      it->second += p;
      if (it->second.is_zero()) grades.erase(it);
    }
  }
  S grade(int g) const {
    auto it = grades.find(g);
    return it == grades.end() ? S(dim) : it->second;
  }
  bool operator==(const BasicGradedSymbol&) const = default;
};

using GradedSymbol = BasicGradedSymbol<PhaseSymbol>;
using GenericGradedSymbol = BasicGradedSymbol<GenericSymbol>;

inline nlohmann::json to_json(const GradedSymbol& s) {
  nlohmann::json out;
  out["m"] = s.m;
  out["dim"] = s.dim;
  out["grades"] = nlohmann::json::array();
  for (const auto& [g, p] : s.grades) out["grades"].push_back({{"hbar_exp", g}, {"symbol", to_json(p)}});
  return out;
}

inline GradedSymbol graded_symbol_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("m") || !j.contains("dim") || !j.contains("grades"))
    throw FormatError("GradedSymbol JSON needs \"m\", \"dim\" and \"grades\"");
  GradedSymbol s{j.at("m").get<int>(), j.at("dim").get<int>(), {}};
  check_dim(s.dim);
  for (const auto& g : j.at("grades")) s.add(g.at("hbar_exp").get<int>(), phase_symbol_from_json(g.at("symbol")));
  return s;
}

/// Same support and degree rule as for X_m: grade m + i with 1 <= i <= m, i = m mod 2,
/// xi-degree at most i - 1.
template <class S>
void check_symbol_grading(const BasicGradedSymbol<S>& s) {
  if (s.m < 1) throw GradingViolation("graded symbol index must be >= 1");
  for (const auto& [g, p] : s.grades) {
    const int i = g - s.m;
    if (i < 1 || i > s.m || (i - s.m) % 2 != 0)
      throw GradingViolation("symbol of index " + std::to_string(s.m) + " has a component at hbar^" +
                             std::to_string(g));
    if (p.xi_degree() > i - 1)
      throw GradingViolation("symbol component at hbar^" + std::to_string(g) + " has xi-degree " +
                             std::to_string(p.xi_degree()));
  }
}

/// Full symbol of a differential operator: b_a(x) d^a  ->  b_a(x) i^{|a|} xi^a.
inline PhaseSymbol symbol_of(const DiffOp& d) {
  PhaseSymbol out(d.dim());
  for (const auto& [alpha, b] : d.terms()) {
    const ComplexRational unit = ComplexRational::i_pow(alpha.order());
    for (const auto& [beta, c] : b.terms()) out.add_term(alpha, beta, unit * ComplexRational(c));
  }
  return out;
}

inline GradedSymbol symbol_of(const KantorovitzTerm& x) {
  if (x.m < 1) throw DomainError("symbol_of: index must be >= 1");
  check_grading(x.op, x.m);
  GradedSymbol out{x.m, x.op.dim(), {}};
  for (const auto& [g, op] : x.op.grades()) out.add(g, symbol_of(op));
  return out;
}

/// sigma_1 = hbar^2 V.
inline GradedSymbol first_symbol(const Polynomial& potential) {
  GradedSymbol s{1, potential.dim(), {}};
  s.add(2, PhaseSymbol::from_polynomial(potential));
  return s;
}

inline GenericGradedSymbol first_generic_symbol(int dim) {
  GenericGradedSymbol s{1, dim, {}};
  s.add(2, GenericSymbol::potential(dim));
  return s;
}

namespace detail {

/// -i sum_r xi_r d/dx_r
template <class S>
S xi_transport(const S& p) {
  S out(p.dim());
  for (int r = 0; r < p.dim(); ++r) out += p.d_x(r).times_xi(r);
  return out * ComplexRational(0, -1);
}

/// i sum_r x_r d/dxi_r
template <class S>
S x_transport(const S& p) {
  S out(p.dim());
  for (int r = 0; r < p.dim(); ++r) out += p.d_xi(r).times_x(r);
  return out * ComplexRational(0, 1);
}

template <class S>
S x_laplacian(const S& p) {
  S out(p.dim());
  for (int r = 0; r < p.dim(); ++r) out += p.d_x(r).d_x(r);
  return out;
}

template <class S>
S xi_laplacian(const S& p) {
  S out(p.dim());
  for (int r = 0; r < p.dim(); ++r) out += p.d_xi(r).d_xi(r);
  return out;
}

}  // namespace detail

/// Full-symbol recursion for left Kohn-Nirenberg symbols:
///   p^i_{m+1} = (-i xi.d_x - d_x^2/2 + V) p_m^{i-1} + (i x.d_xi + d_xi^2/2) p_m^{i+1}.
template <class S, class Potential>
BasicGradedSymbol<S> full_symbol_step(const BasicGradedSymbol<S>& p, const Potential& potential) {
  check_symbol_grading(p);
  BasicGradedSymbol<S> out{p.m + 1, p.dim, {}};
  const ComplexRational half(rational(1, 2));
  for (const auto& [g, q] : p.grades) {
    out.add(g + 2, detail::xi_transport(q) + detail::x_laplacian(q) * (-half) + times_potential(q, potential));
    out.add(g, detail::x_transport(q) + detail::xi_laplacian(q) * half);
  }
  return out;
}

/// Principal part: the xi-homogeneous component of degree i - 1 at grade m + i.
template <class S>
BasicGradedSymbol<S> principal_part(const BasicGradedSymbol<S>& p) {
  BasicGradedSymbol<S> out{p.m, p.dim, {}};
  for (const auto& [g, q] : p.grades) out.add(g, q.xi_homogeneous_part(g - p.m - 1));
  return out;
}

/// Subprincipal part: the xi-homogeneous component of degree i - 2 at grade m + i.
template <class S>
BasicGradedSymbol<S> subprincipal_part(const BasicGradedSymbol<S>& p) {
  BasicGradedSymbol<S> out{p.m, p.dim, {}};
  for (const auto& [g, q] : p.grades) out.add(g, q.xi_homogeneous_part(g - p.m - 2));
  return out;
}

/// sigma^i_{m+1} = -i sum_r (xi_r d_{x_r} sigma_m^{i-1} - x_r d_{xi_r} sigma_m^{i+1}).
template <class S>
BasicGradedSymbol<S> principal_step(const BasicGradedSymbol<S>& sigma) {
  check_symbol_grading(sigma);
  BasicGradedSymbol<S> out{sigma.m + 1, sigma.dim, {}};
  for (const auto& [g, q] : sigma.grades) {
    out.add(g + 2, detail::xi_transport(q));
    out.add(g, detail::x_transport(q));
  }
  return out;
}

/// tsigma^i_{m+1} = -i sum_r (xi_r d_{x_r} tsigma_m^{i-1} - x_r d_{xi_r} tsigma_m^{i+1})
///                  - 1/2 sum_r (d_{x_r}^2 sigma_m^{i-1} - d_{xi_r}^2 sigma_m^{i+1}) + V sigma_m^{i-1}.
template <class S, class Potential>
BasicGradedSymbol<S> subprincipal_step(const BasicGradedSymbol<S>& sub, const BasicGradedSymbol<S>& sigma,
                                       const Potential& potential) {
  if (sub.m != sigma.m || sub.dim != sigma.dim)
    throw GradingViolation("subprincipal_step: principal and subprincipal symbols disagree on index or dimension");
  check_symbol_grading(sigma);
  BasicGradedSymbol<S> out{sigma.m + 1, sigma.dim, {}};
  const ComplexRational half(rational(1, 2));
  for (const auto& [g, q] : sub.grades) {
    const int i = g - sub.m;
    if (i < 1 || i > sub.m || (i - sub.m) % 2 != 0 || q.xi_degree() > i - 2)
      throw GradingViolation("subprincipal symbol has an invalid component at hbar^" + std::to_string(g));
    out.add(g + 2, detail::xi_transport(q));
    out.add(g, detail::x_transport(q));
  }
  for (const auto& [g, q] : sigma.grades) {
    out.add(g + 2, detail::x_laplacian(q) * (-half) + times_potential(q, potential));
    out.add(g, detail::xi_laplacian(q) * half);
  }
  return out;
}

/// The raising-operator form  sigma_m = [-i sum_r (xi_r d_{x_r} U - x_r d_{xi_r})]^{m-1} hbar^2 V,
/// with U multiplying by hbar^2. Works on the whole hbar-series at once.
template <class S>
BasicGradedSymbol<S> apply_raising_operator(const BasicGradedSymbol<S>& sigma) {
  BasicGradedSymbol<S> shifted{sigma.m, sigma.dim, {}};
  for (const auto& [g, q] : sigma.grades) shifted.add(g + 2, q);  // U
  BasicGradedSymbol<S> out{sigma.m + 1, sigma.dim, {}};
  for (const auto& [g, q] : shifted.grades) out.add(g, detail::xi_transport(q));
  for (const auto& [g, q] : sigma.grades) out.add(g, detail::x_transport(q));
  return out;
}

inline GradedSymbol principal_symbol_closed_form(int m, const Polynomial& potential) {
  if (m < 1) throw DomainError("principal_symbol_closed_form: m must be >= 1");
  GradedSymbol s = first_symbol(potential);
  for (int k = 1; k < m; ++k) s = apply_raising_operator(s);
  return s;
}

/// sigma_m^{m-1} = (-i sum_r xi_r d/dx_r)^{m-1} V.
inline PhaseSymbol sigma_top(int m, const Polynomial& potential) {
  if (m < 1) throw DomainError("sigma_top: m must be >= 1");
  PhaseSymbol q = PhaseSymbol::from_polynomial(potential);
  for (int k = 1; k < m; ++k) q = detail::xi_transport(q);
  return q;
}

/// Replace xi^a by the constant the operator D^a = (-i d)^a produces on the Gaussian factor,
///   xi^a  ->  (-i)^{|a|} c_a,
/// and check that the result is real.
inline Polynomial xi_substitute(const PhaseSymbol& p, const DerivativeConstants& c_mu = mehler_derivative_constant) {
  Polynomial out(p.dim());
  Polynomial imag(p.dim());
  for (const auto& [k, c] : p.terms()) {
    const Rational ca = c_mu(k.xi);
    if (ca == 0) continue;
    const ComplexRational v = c * ComplexRational::i_pow(-k.xi.order()) * ComplexRational(ca);
    out.add_term(k.x, v.re);
    imag.add_term(k.x, v.im);
  }
  if (!imag.is_zero()) throw InternalError("xi substitution left an imaginary part: " + to_string(imag));
  return out;
}

/// Leading coefficient rho_m of X_m e|_{x=y} = hbar^{m+1} rho_m + O(hbar^{m+3}) for odd m,
/// from the principal symbols alone:
///   rho_m = e^{-s|x|^2} sum_i s^{(1-i)/2} [sigma_m^{i-1}]_{xi^a -> (-i)^{|a|} c_a}.
inline GaussianLaurent rho_odd(const GradedSymbol& sigma, const DerivativeConstants& c_mu = mehler_derivative_constant) {
  if (sigma.m % 2 == 0) throw DomainError("rho_odd: m must be odd; use rho_even or diagonal_eval for even m");
  check_symbol_grading(sigma);
  GaussianLaurent out(sigma.dim);
  for (const auto& [g, q] : sigma.grades) {
    const int i = g - sigma.m;
    out.add((1 - i) / 2, xi_substitute(q.xi_homogeneous_part(i - 1), c_mu));
  }
  return out;
}

inline GaussianLaurent rho_odd(const KantorovitzTerm& x, const DerivativeConstants& c_mu = mehler_derivative_constant) {
  if (x.m % 2 == 0) throw DomainError("rho_odd: m must be odd; use rho_even or diagonal_eval for even m");
  return rho_odd(principal_part(symbol_of(x)), c_mu);
}

/// Leading coefficient for even m, X_m e|_{x=y} = hbar^{m+2} rho_m + O(hbar^{m+4}), from the
/// principal symbol (one derivative on exp(-s|x+y|^2/4), which gives -s x_r) and the
/// subprincipal symbol (all derivatives on the singular Gaussian).
inline GaussianLaurent rho_even(const GradedSymbol& sigma, const GradedSymbol& sub,
                                const DerivativeConstants& c_mu = mehler_derivative_constant) {
  if (sigma.m % 2 != 0) throw DomainError("rho_even: m must be even");
  if (sigma.m != sub.m || sigma.dim != sub.dim) throw GradingViolation("rho_even: symbol indices disagree");
  check_symbol_grading(sigma);
  const int n = sigma.dim;
  GaussianLaurent out(n);
  for (const auto& [g, q] : sigma.grades) {
    const int i = g - sigma.m;
    Polynomial acc(n);
    const PhaseSymbol top = q.xi_homogeneous_part(i - 1);
    for (const auto& [k, c] : top.terms()) {
      for (int r = 0; r < n; ++r) {
        if (k.xi[r] == 0) continue;
        const Rational cr = c_mu(k.xi - MultiIndex::unit(n, r));
        if (cr == 0) continue;
        const ComplexRational v = c * ComplexRational::i_pow(-k.xi.order()) * ComplexRational(cr * -k.xi[r]);
        if (!v.is_real()) throw InternalError("rho_even: imaginary principal contribution");
        acc.add_term(k.x + MultiIndex::unit(n, r), v.re);
      }
    }
    out.add(1 - (i - 2) / 2, acc);
  }
  for (const auto& [g, q] : sub.grades) {
    const int i = g - sub.m;
    out.add(-(i - 2) / 2, xi_substitute(q.xi_homogeneous_part(i - 2), c_mu));
  }
  return out;
}

inline GaussianLaurent rho_even(const KantorovitzTerm& x, const DerivativeConstants& c_mu = mehler_derivative_constant) {
  const GradedSymbol full = symbol_of(x);
  return rho_even(principal_part(full), subprincipal_part(full), c_mu);
}

/// d/dx_r of e^{-s|x|^2} sum_j s^j P_j  =  e^{-s|x|^2} sum_j (s^j d_r P_j - 2 s^{j+1} x_r P_j).
inline GaussianLaurent gaussian_derivative(const GaussianLaurent& g, int r) {
  GaussianLaurent out(g.dim());
  const Polynomial xr = Polynomial::coordinate(g.dim(), r) * Rational(-2);
  for (const auto& [j, p] : g.terms()) {
    out.add(j, p.derivative(r));
    out.add(j + 1, xr * p);
  }
  return out;
}

/// Integral of rho_m over R^n for odd m as a linear functional of V:
///   int rho_m dx = int p(x, s) V e^{-s|x|^2} dx
///                = int_0^inf sum_k chi_k(s) r^{2k} e^{-s r^2} int_{|x|=r} V dsigma_r dr.
struct InvariantStructure {
  int m = 1;
  int dim = 1;
  /// p(x, s) before rotation averaging (stored with the Gaussian weight).
  GaussianLaurent weight;
  /// chi_k(s), the coefficient of |x|^{2k} after averaging over O(n).
  std::map<int, SLaurent> chi;

  int weight_degree() const { return weight.x_degree(); }

  /// sum_k chi_k(s) int |x|^{2k} V e^{-s|x|^2} dx, exactly.
  GaussianIntegral apply(const Polynomial& potential) const {
    require_same_dim(dim, potential.dim(), "InvariantStructure::apply");
    GaussianIntegral out{dim, {}};
    for (const auto& [k, c] : chi) {
      const GaussianIntegral part = gaussian_integral(pow(Polynomial::radius_squared(dim), k) * potential);
      out.coeffs += part.coeffs * c;
    }
    return out;
  }

  /// int p(x, s) V e^{-s|x|^2} dx without the averaging step.
  GaussianIntegral apply_unaveraged(const Polynomial& potential) const {
    return gaussian_integral(weight * potential);
  }
};

inline GenericGradedSymbol generic_principal_symbol(int m, int dim) {
  if (m < 1) throw DomainError("generic_principal_symbol: m must be >= 1");
  GenericGradedSymbol s = first_generic_symbol(dim);
  for (int k = 1; k < m; ++k) s = principal_step(s);
  return s;
}

inline InvariantStructure invariant_structure(int m, int dim,
                                              const DerivativeConstants& c_mu = mehler_derivative_constant) {
  if (m < 1 || m % 2 == 0) throw DomainError("invariant_structure: m must be odd and positive");
  if (m > 7) throw DomainError("invariant_structure: m must be <= 7");
  check_dim(dim);
  const GenericGradedSymbol sigma = generic_principal_symbol(m, dim);

  InvariantStructure out{m, dim, GaussianLaurent(dim), {}};
  for (const auto& [g, q] : sigma.grades) {
    const int i = g - m;
    const GenericSymbol top = q.xi_homogeneous_part(i - 1);
    for (const auto& [k, c] : top.terms()) {
      if (k.dv.size() != 1) throw InternalError("principal symbol is not linear in V");
      const Rational ca = c_mu(k.xi);
      if (ca == 0) continue;
      const ComplexRational v = c * ComplexRational::i_pow(-k.xi.order()) * ComplexRational(ca);
      if (!v.is_real()) throw InternalError("invariant_structure: imaginary coefficient");
      // int x^g d^b V e^{-s|x|^2} = (-1)^{|b|} int V d^b (x^g e^{-s|x|^2}).
      const MultiIndex& beta = k.dv.front();
      GaussianLaurent w = GaussianLaurent::term(0, Polynomial::monomial(k.x));
      for (int r = 0; r < dim; ++r)
        for (int e = 0; e < beta[r]; ++e) w = gaussian_derivative(w, r);
      const Rational sign = beta.order() % 2 == 0 ? Rational(1) : Rational(-1);
      out.weight += (w * (v.re * sign)).times_s((1 - i) / 2);
    }
  }
  for (const auto& [j, p] : out.weight.terms()) {
    for (const auto& [delta, c] : p.terms()) {
      const Rational avg = sphere_average(delta);
      if (avg == 0) continue;
      out.chi[delta.order() / 2].add(j, c * avg);
    }
  }
  for (auto it = out.chi.begin(); it != out.chi.end();) it = it->second.is_zero() ? out.chi.erase(it) : std::next(it);
  return out;
}

inline nlohmann::json to_json(const InvariantStructure& s) {
  nlohmann::json out;
  out["m"] = s.m;
  out["dim"] = s.dim;
  out["weight"] = to_json(s.weight);
  out["weight_degree"] = s.weight_degree();
  out["chi"] = nlohmann::json::array();
  for (const auto& [k, c] : s.chi) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [e, v] : c.terms()) {
      nlohmann::json t{{"s_exp", e}};
      write_rational(t, v);
      terms.push_back(std::move(t));
    }
    out["chi"].push_back({{"radial_power", 2 * k}, {"terms", terms}});
  }
  return out;
}

}  // namespace hkexp
