#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "hkexp/multi_index.hpp"
#include "hkexp/rational.hpp"

namespace hkexp {

/// Multivariate polynomial in x = (x_1..x_n) with exact rational coefficients.
/// Zero coefficients are never stored, so structural equality is value equality.
class Polynomial {
 public:
  using Terms = std::map<MultiIndex, Rational>;

  Polynomial() = default;
  explicit Polynomial(int dim) : dim_(dim) { check_dim(dim); }

  static Polynomial constant(int dim, const Rational& c) {
    Polynomial p(dim);
    p.add_term(MultiIndex(dim), c);
    return p;
  }
  static Polynomial monomial(const MultiIndex& a, const Rational& c = 1) {
    Polynomial p(a.dim());
    p.add_term(a, c);
    return p;
  }
  /// The coordinate function x_r (0-based r).
  static Polynomial coordinate(int dim, int r) { return monomial(MultiIndex::unit(dim, r)); }
  /// |x|^2.
  static Polynomial radius_squared(int dim) {
    Polynomial p(dim);
    for (int r = 0; r < dim; ++r) p.add_term(MultiIndex::unit(dim, r, 2), 1);
    return p;
  }

  int dim() const { return dim_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  /// Total degree; -1 for the zero polynomial.
  int degree() const {
    int d = -1;
    for (const auto& [a, c] : terms_) d = std::max(d, a.order());
    return d;
  }

  Rational coeff(const MultiIndex& a) const {
    auto it = terms_.find(a);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  void add_term(const MultiIndex& a, const Rational& c) {
    if (a.dim() != dim_) throw DimensionMismatch("Polynomial::add_term: dimension mismatch");
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(a, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    require_same_dim(dim_, o.dim_, "Polynomial +");
    for (const auto& [a, c] : o.terms_) add_term(a, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    require_same_dim(dim_, o.dim_, "Polynomial -");
    for (const auto& [a, c] : o.terms_) add_term(a, -c);
    return *this;
  }
  Polynomial& operator*=(const Rational& k) {
    if (k == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [a, c] : terms_) c *= k;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const Rational& k) { return a *= k; }
  friend Polynomial operator*(const Rational& k, Polynomial a) { return a *= k; }
  Polynomial operator-() const { return *this * Rational(-1); }

  friend Polynomial operator*(const Polynomial& p, const Polynomial& q);

  bool operator==(const Polynomial& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

  /// d/dx_r applied k times.
  Polynomial derivative(int r, int k = 1) const {
    Polynomial out(dim_);
    for (const auto& [a, c] : terms_) {
      if (a[r] < k) continue;
      MultiIndex b = a;
      b[r] -= k;
      Rational f = c;
      for (int j = 0; j < k; ++j) f *= a[r] - j;
      out.add_term(b, f);
    }
    return out;
  }

  /// Partial derivative of multi-order gamma.
  Polynomial derivative(const MultiIndex& gamma) const {
    require_same_dim(dim_, gamma.dim(), "Polynomial::derivative");
    Polynomial out(dim_);
    for (const auto& [a, c] : terms_) {
      if (!gamma.below(a)) continue;
      Rational f = c;
      for (int r = 0; r < dim_; ++r)
        for (int j = 0; j < gamma[r]; ++j) f *= a[r] - j;
      out.add_term(a - gamma, f);
    }
    return out;
  }

  Polynomial laplacian() const {
    Polynomial out(dim_);
    for (int r = 0; r < dim_; ++r) out += derivative(r, 2);
    return out;
  }

  /// Euler operator x . grad, which multiplies each monomial by its degree.
  Polynomial euler() const {
    Polynomial out(dim_);
    for (const auto& [a, c] : terms_) out.add_term(a, c * a.order());
    return out;
  }

  bool is_odd() const {
    for (const auto& [a, c] : terms_)
      if (a.order() % 2 == 0) return false;
    return true;
  }

  double eval(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& [a, c] : terms_) {
      double m = c.get_d();
      for (int r = 0; r < dim_; ++r) m *= std::pow(x[r], a[r]);
      sum += m;
    }
    return sum;
  }

  Rational eval(std::span<const Rational> x) const {
    Rational sum = 0;
    for (const auto& [a, c] : terms_) {
      Rational m = c;
      for (int r = 0; r < dim_; ++r) m *= rational_pow(x[r], static_cast<unsigned>(a[r]));
      sum += m;
    }
    return sum;
  }

  /// Composition with a linear map: (p o M)(x) = p(M x), M given row-major n x n.
  Polynomial compose_linear(std::span<const Rational> m) const;

 private:
  Terms terms_;
  int dim_ = 1;
};

inline Polynomial operator*(const Polynomial& p, const Polynomial& q) {
  require_same_dim(p.dim_, q.dim_, "Polynomial *");
  Polynomial out(p.dim_);
  for (const auto& [a, c] : p.terms_)
    for (const auto& [b, d] : q.terms_) out.add_term(a + b, c * d);
  return out;
}

inline Polynomial poly_mul(const Polynomial& p, const Polynomial& q) { return p * q; }

inline Polynomial pow(const Polynomial& p, int e) {
  Polynomial out = Polynomial::constant(p.dim(), 1);
  for (int i = 0; i < e; ++i) out = out * p;
  return out;
}

inline Polynomial Polynomial::compose_linear(std::span<const Rational> m) const {
  std::vector<Polynomial> images;
  for (int r = 0; r < dim_; ++r) {
    Polynomial row(dim_);
    for (int c = 0; c < dim_; ++c) row.add_term(MultiIndex::unit(dim_, c), m[r * dim_ + c]);
    images.push_back(std::move(row));
  }
  Polynomial out(dim_);
  for (const auto& [a, c] : terms_) {
    Polynomial term = constant(dim_, c);
    for (int r = 0; r < dim_; ++r) term = term * hkexp::pow(images[r], a[r]);
    out += term;
  }
  return out;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline std::ostream& operator<<(std::ostream& os, const Polynomial& p) {
  if (p.is_zero()) return os << "0";
  static const char* names[] = {"x1", "x2", "x3"};
  bool first = true;
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    const auto& [a, c] = *it;
    Rational mag = abs(c);
    os << (c < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
    bool unit = a.order() == 0;
    if (mag != 1 || unit) os << mag.get_str();
    bool need_star = mag != 1;
    for (int r = 0; r < p.dim(); ++r) {
      if (a[r] == 0) continue;
      if (need_star) os << "*";
      os << (p.dim() == 1 ? "x" : names[r]);
      if (a[r] > 1) os << "^" << a[r];
      need_star = true;
    }
    first = false;
  }
  return os;
}

inline std::string to_string(const Polynomial& p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

// --- JSON: {"dim": n, "terms": [{"alpha": [..], "num": int, "den": int}, ...]}

inline nlohmann::json multi_index_to_json(const MultiIndex& a) {
  nlohmann::json arr = nlohmann::json::array();
  for (int r = 0; r < a.dim(); ++r) arr.push_back(a[r]);
  return arr;
}

inline MultiIndex multi_index_from_json(const nlohmann::json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw FormatError("multi-index must be an array of length " + std::to_string(dim));
  MultiIndex a(dim);
  for (int r = 0; r < dim; ++r) {
    int e = j[r].get<int>();
    if (e < 0) throw FormatError("negative exponent in multi-index");
    a[r] = e;
  }
  return a;
}

inline nlohmann::json to_json(const Polynomial& p) {
  nlohmann::json out;
  out["dim"] = p.dim();
  out["terms"] = nlohmann::json::array();
  for (const auto& [a, c] : p.terms()) {
    nlohmann::json t;
    t["alpha"] = multi_index_to_json(a);
    write_rational(t, c);
    out["terms"].push_back(std::move(t));
  }
  return out;
}

inline Polynomial polynomial_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("terms"))
    throw FormatError("Polynomial JSON needs \"dim\" and \"terms\"");
  int dim = j.at("dim").get<int>();
  check_dim(dim);
  Polynomial p(dim);
  for (const auto& t : j.at("terms")) p.add_term(multi_index_from_json(t.at("alpha"), dim), read_rational(t));
  return p;
}

}  // namespace hkexp
