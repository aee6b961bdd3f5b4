#pragma once

#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hkexp/polynomial.hpp"

namespace hkexp {

/// Differential operator sum_alpha a_alpha(x) d^alpha with polynomial coefficients.
///
/// Storage uses plain partial derivatives, so every coefficient stays rational.
/// The normalized derivative D = -i d only appears when an operator is turned
/// into a phase-space symbol (see symbol_of in symbolcalc.hpp).
class DiffOp {
 public:
  using Terms = std::map<MultiIndex, Polynomial>;

  DiffOp() = default;
  explicit DiffOp(int dim) : dim_(dim) { check_dim(dim); }

  static DiffOp identity(int dim) { return multiplication(Polynomial::constant(dim, 1)); }

  static DiffOp multiplication(const Polynomial& f) {
    DiffOp d(f.dim());
    d.add_term(MultiIndex(f.dim()), f);
    return d;
  }

  /// coefficient * d^alpha.
  static DiffOp derivative(const MultiIndex& alpha, const Rational& coefficient = 1) {
    DiffOp d(alpha.dim());
    d.add_term(alpha, Polynomial::constant(alpha.dim(), coefficient));
    return d;
  }

  static DiffOp laplacian(int dim) {
    DiffOp d(dim);
    for (int r = 0; r < dim; ++r) d.add_term(MultiIndex::unit(dim, r, 2), Polynomial::constant(dim, 1));
    return d;
  }

  int dim() const { return dim_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  /// Largest |alpha| with nonzero coefficient; -1 for the zero operator.
  int degree() const {
    int d = -1;
    for (const auto& [a, c] : terms_) d = std::max(d, a.order());
    return d;
  }

  Polynomial coefficient(const MultiIndex& alpha) const {
    auto it = terms_.find(alpha);
    return it == terms_.end() ? Polynomial(dim_) : it->second;
  }

  void add_term(const MultiIndex& alpha, const Polynomial& coefficient) {
    require_same_dim(dim_, alpha.dim(), "DiffOp::add_term");
    require_same_dim(dim_, coefficient.dim(), "DiffOp::add_term");
    if (coefficient.is_zero()) return;
    auto [it, inserted] = terms_.emplace(alpha, coefficient);
    if (!inserted) {
      it->second += coefficient;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  DiffOp& operator+=(const DiffOp& o) {
    require_same_dim(dim_, o.dim_, "DiffOp +");
    for (const auto& [a, c] : o.terms_) add_term(a, c);
    return *this;
  }
  DiffOp& operator-=(const DiffOp& o) {
    require_same_dim(dim_, o.dim_, "DiffOp -");
    for (const auto& [a, c] : o.terms_) add_term(a, -c);
    return *this;
  }
  DiffOp& operator*=(const Rational& k) {
    if (k == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [a, c] : terms_) c *= k;
    return *this;
  }
  friend DiffOp operator+(DiffOp a, const DiffOp& b) { return a += b; }
  friend DiffOp operator-(DiffOp a, const DiffOp& b) { return a -= b; }
  friend DiffOp operator*(DiffOp a, const Rational& k) { return a *= k; }
  friend DiffOp operator*(const Rational& k, DiffOp a) { return a *= k; }
  DiffOp operator-() const { return *this * Rational(-1); }

  bool operator==(const DiffOp& o) const { return dim_ == o.dim_ && terms_ == o.terms_; }

  /// f o D, i.e. every coefficient multiplied by f.
  DiffOp left_multiply(const Polynomial& f) const {
    DiffOp out(dim_);
    for (const auto& [a, c] : terms_) out.add_term(a, f * c);
    return out;
  }

  /// Part of the operator with |alpha| == order.
  DiffOp homogeneous_part(int order) const {
    DiffOp out(dim_);
    for (const auto& [a, c] : terms_)
      if (a.order() == order) out.add_term(a, c);
    return out;
  }

 private:
  Terms terms_;
  int dim_ = 1;
};

/// (D1 o D2) via the Leibniz rule
///   (a d^alpha)(b d^beta) = sum_{gamma <= alpha} C(alpha, gamma) a (d^gamma b) d^{alpha - gamma + beta}.
inline DiffOp op_compose(const DiffOp& d1, const DiffOp& d2) {
  require_same_dim(d1.dim(), d2.dim(), "op_compose");
  DiffOp out(d1.dim());
  for (const auto& [alpha, a] : d1.terms()) {
    for (const auto& [beta, b] : d2.terms()) {
      for_each_below(alpha, [&](const MultiIndex& gamma) {
        Polynomial db = b.derivative(gamma);
        if (db.is_zero()) return;
        Rational k(multi_binomial(alpha, gamma));
        out.add_term(alpha - gamma + beta, (a * db) * k);
      });
    }
  }
  return out;
}

inline DiffOp operator*(const DiffOp& d1, const DiffOp& d2) { return op_compose(d1, d2); }

inline DiffOp op_commutator(const DiffOp& d1, const DiffOp& d2) {
  return op_compose(d1, d2) - op_compose(d2, d1);
}

inline Polynomial op_apply(const DiffOp& d, const Polynomial& p) {
  require_same_dim(d.dim(), p.dim(), "op_apply");
  Polynomial out(d.dim());
  for (const auto& [alpha, a] : d.terms()) {
    Polynomial dp = p.derivative(alpha);
    if (!dp.is_zero()) out += a * dp;
  }
  return out;
}

inline std::ostream& operator<<(std::ostream& os, const DiffOp& d) {
  if (d.is_zero()) return os << "0";
  bool first = true;
  for (auto it = d.terms().rbegin(); it != d.terms().rend(); ++it) {
    const auto& [alpha, c] = *it;
    os << (first ? "" : " + ") << "(" << c << ")";
    for (int r = 0; r < d.dim(); ++r) {
      if (alpha[r] == 0) continue;
      os << "*d" << (r + 1);
      if (alpha[r] > 1) os << "^" << alpha[r];
    }
    first = false;
  }
  return os;
}

inline std::string to_string(const DiffOp& d) {
  std::ostringstream os;
  os << d;
  return os.str();
}

// --- JSON: {"dim": n, "terms": [{"deriv": [..], "coeff": <Polynomial JSON>}, ...]}

inline nlohmann::json to_json(const DiffOp& d) {
  nlohmann::json out;
  out["dim"] = d.dim();
  out["terms"] = nlohmann::json::array();
  for (const auto& [alpha, c] : d.terms()) {
    out["terms"].push_back({{"deriv", multi_index_to_json(alpha)}, {"coeff", to_json(c)}});
  }
  return out;
}

inline DiffOp diff_op_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("terms"))
    throw FormatError("DiffOp JSON needs \"dim\" and \"terms\"");
  int dim = j.at("dim").get<int>();
  check_dim(dim);
  DiffOp d(dim);
  for (const auto& t : j.at("terms")) {
    Polynomial c = polynomial_from_json(t.at("coeff"));
    require_same_dim(dim, c.dim(), "DiffOp JSON");
    d.add_term(multi_index_from_json(t.at("deriv"), dim), c);
  }
  return d;
}

}  // namespace hkexp
