#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hkexp/polynomial.hpp"

namespace hkexp {

/// Laurent polynomial in s with rational coefficients.
class SLaurent {
 public:
  using Terms = std::map<int, Rational>;

  SLaurent() = default;
  static SLaurent monomial(int e, const Rational& c = 1) {
    SLaurent out;
    out.add(e, c);
    return out;
  }

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  Rational coeff(int e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  void add(int e, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  SLaurent& operator+=(const SLaurent& o) {
    for (const auto& [e, c] : o.terms_) add(e, c);
    return *this;
  }
  SLaurent& operator-=(const SLaurent& o) {
    for (const auto& [e, c] : o.terms_) add(e, -c);
    return *this;
  }
  friend SLaurent operator+(SLaurent a, const SLaurent& b) { return a += b; }
  friend SLaurent operator-(SLaurent a, const SLaurent& b) { return a -= b; }
  friend SLaurent operator*(const SLaurent& a, const SLaurent& b) {
    SLaurent out;
    for (const auto& [e1, c1] : a.terms_)
      for (const auto& [e2, c2] : b.terms_) out.add(e1 + e2, c1 * c2);
    return out;
  }
  friend SLaurent operator*(SLaurent a, const Rational& k) {
    if (k == 0) return SLaurent{};
    for (auto& [e, c] : a.terms_) c *= k;
    return a;
  }
  bool operator==(const SLaurent& o) const { return terms_ == o.terms_; }

  double eval(double s) const {
    double sum = 0.0;
    for (const auto& [e, c] : terms_) sum += c.get_d() * std::pow(s, e);
    return sum;
  }

 private:
  Terms terms_;
};

inline std::ostream& operator<<(std::ostream& os, const SLaurent& p) {
  if (p.is_zero()) return os << "0";
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    os << (first ? "" : " + ") << c.get_str();
    if (e != 0) os << "*s^" << e;
    first = false;
  }
  return os;
}

/// e^{-s|x|^2} * sum_j s^j P_j(x), j ranging over the integers.
class GaussianLaurent {
 public:
  using Terms = std::map<int, Polynomial>;

  GaussianLaurent() = default;
  explicit GaussianLaurent(int dim) : dim_(dim) { check_dim(dim); }

  static GaussianLaurent term(int s_exp, const Polynomial& p) {
    GaussianLaurent out(p.dim());
    out.add(s_exp, p);
    return out;
  }

  int dim() const { return dim_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  Polynomial coeff(int s_exp) const {
    auto it = terms_.find(s_exp);
    return it == terms_.end() ? Polynomial(dim_) : it->second;
  }

  void add(int s_exp, const Polynomial& p) {
    require_same_dim(dim_, p.dim(), "GaussianLaurent::add");
    if (p.is_zero()) return;
    auto [it, inserted] = terms_.emplace(s_exp, p);
    if (!inserted) {
      it->second += p;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  GaussianLaurent& operator+=(const GaussianLaurent& o) {
    require_same_dim(dim_, o.dim_, "GaussianLaurent +");
    for (const auto& [e, p] : o.terms_) add(e, p);
    return *this;
  }
  GaussianLaurent& operator-=(const GaussianLaurent& o) {
    require_same_dim(dim_, o.dim_, "GaussianLaurent -");
    for (const auto& [e, p] : o.terms_) add(e, -p);
    return *this;
  }
  friend GaussianLaurent operator+(GaussianLaurent a, const GaussianLaurent& b) { return a += b; }
  friend GaussianLaurent operator-(GaussianLaurent a, const GaussianLaurent& b) { return a -= b; }

  friend GaussianLaurent operator*(const GaussianLaurent& g, const Rational& k) {
    GaussianLaurent out(g.dim_);
    if (k == 0) return out;
    for (const auto& [e, p] : g.terms_) out.terms_.emplace(e, p * k);
    return out;
  }
  friend GaussianLaurent operator*(const GaussianLaurent& g, const SLaurent& q) {
    GaussianLaurent out(g.dim_);
    for (const auto& [e, p] : g.terms_)
      for (const auto& [f, c] : q.terms()) out.add(e + f, p * c);
    return out;
  }
  friend GaussianLaurent operator*(const GaussianLaurent& g, const Polynomial& q) {
    GaussianLaurent out(g.dim_);
    for (const auto& [e, p] : g.terms_) out.add(e, p * q);
    return out;
  }
  GaussianLaurent times_s(int k) const {
    GaussianLaurent out(dim_);
    for (const auto& [e, p] : terms_) out.terms_.emplace(e + k, p);
    return out;
  }

  bool operator==(const GaussianLaurent& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

  int min_s_exp() const { return terms_.empty() ? 0 : terms_.begin()->first; }
  int max_s_exp() const { return terms_.empty() ? 0 : terms_.rbegin()->first; }

  /// Largest x-degree over all s-coefficients.
  int x_degree() const {
    int d = -1;
    for (const auto& [e, p] : terms_) d = std::max(d, p.degree());
    return d;
  }

  /// Prefactor sum_j s^j P_j(x), without the Gaussian.
  double eval_prefactor(double s, std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& [e, p] : terms_) sum += std::pow(s, e) * p.eval(x);
    return sum;
  }

  double eval(double s, std::span<const double> x) const {
    double r2 = 0.0;
    for (int r = 0; r < dim_; ++r) r2 += x[r] * x[r];
    return std::exp(-s * r2) * eval_prefactor(s, x);
  }

 private:
  Terms terms_;
  int dim_ = 1;
};

inline std::ostream& operator<<(std::ostream& os, const GaussianLaurent& g) {
  if (g.is_zero()) return os << "0";
  os << "exp(-s|x|^2) * [";
  bool first = true;
  for (const auto& [e, p] : g.terms()) {
    os << (first ? "" : " + ") << "s^" << e << "*(" << p << ")";
    first = false;
  }
  return os << "]";
}

inline std::string to_string(const GaussianLaurent& g) {
  std::ostringstream os;
  os << g;
  return os.str();
}

// --- JSON: {"dim": n, "gaussian": true, "terms": [{"s_exp": j, "poly": <Polynomial JSON>}]}

inline nlohmann::json to_json(const GaussianLaurent& g) {
  nlohmann::json out;
  out["dim"] = g.dim();
  out["gaussian"] = true;
  out["terms"] = nlohmann::json::array();
  for (const auto& [e, p] : g.terms()) out["terms"].push_back({{"s_exp", e}, {"poly", to_json(p)}});
  return out;
}

inline GaussianLaurent gaussian_laurent_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("terms"))
    throw FormatError("GaussianLaurent JSON needs \"dim\" and \"terms\"");
  if (j.contains("gaussian") && !j.at("gaussian").get<bool>())
    throw FormatError("GaussianLaurent JSON must carry \"gaussian\": true");
  int dim = j.at("dim").get<int>();
  GaussianLaurent g(dim);
  for (const auto& t : j.at("terms")) {
    Polynomial p = polynomial_from_json(t.at("poly"));
    require_same_dim(dim, p.dim(), "GaussianLaurent JSON");
    g.add(t.at("s_exp").get<int>(), p);
  }
  return g;
}

/// Series sum_k hbar^k G_k, with every stored exponent <= the truncation order.
class HSeries {
 public:
  using Coeffs = std::map<int, GaussianLaurent>;

  HSeries() = default;
  HSeries(int dim, int truncation_order) : dim_(dim), order_(truncation_order) { check_dim(dim); }

  int dim() const { return dim_; }
  int truncation_order() const { return order_; }
  const Coeffs& coeffs() const { return coeffs_; }
  bool is_zero() const { return coeffs_.empty(); }

  GaussianLaurent coeff(int k) const {
    auto it = coeffs_.find(k);
    return it == coeffs_.end() ? GaussianLaurent(dim_) : it->second;
  }

  /// Adds hbar^k g; terms beyond the truncation order are dropped.
  void add(int k, const GaussianLaurent& g) {
    require_same_dim(dim_, g.dim(), "HSeries::add");
    if (k > order_ || g.is_zero()) return;
    auto [it, inserted] = coeffs_.emplace(k, g);
    if (!inserted) {
      it->second += g;
      if (it->second.is_zero()) coeffs_.erase(it);
    }
  }

  HSeries& operator+=(const HSeries& o) {
    require_same_dim(dim_, o.dim_, "HSeries +");
    for (const auto& [k, g] : o.coeffs_) add(k, g);
    return *this;
  }

  int lowest_order() const { return coeffs_.empty() ? order_ + 1 : coeffs_.begin()->first; }

  bool operator==(const HSeries& o) const { return dim_ == o.dim_ && coeffs_ == o.coeffs_; }

 private:
  Coeffs coeffs_;
  int dim_ = 1;
  int order_ = 0;
};

/// Power series in hbar whose coefficients are Laurent polynomials in s.
using ScalarSeries = std::map<int, SLaurent>;

inline ScalarSeries truncated_product(const ScalarSeries& a, const ScalarSeries& b, int order) {
  ScalarSeries out;
  for (const auto& [i, p] : a)
    for (const auto& [j, q] : b) {
      if (i + j > order) continue;
      SLaurent pq = p * q;
      if (!pq.is_zero()) out[i + j] += pq;
    }
  for (auto it = out.begin(); it != out.end();) it = it->second.is_zero() ? out.erase(it) : std::next(it);
  return out;
}

/// Scalar series times HSeries, truncated at the series' order.
inline HSeries operator*(const ScalarSeries& a, const HSeries& h) {
  HSeries out(h.dim(), h.truncation_order());
  for (const auto& [i, p] : a)
    for (const auto& [k, g] : h.coeffs())
      if (i + k <= h.truncation_order()) out.add(i + k, g * p);
  return out;
}

}  // namespace hkexp
