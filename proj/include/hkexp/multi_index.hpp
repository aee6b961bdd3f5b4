#pragma once

#include <array>
#include <compare>
#include <initializer_list>
#include <ostream>
#include <string>

#include "hkexp/error.hpp"
#include "hkexp/rational.hpp"

namespace hkexp {

inline constexpr int kMaxDim = 3;

inline void check_dim(int n) {
  if (n < 1 || n > kMaxDim) {
    throw DomainError("dimension must satisfy 1 <= n <= 3, got " + std::to_string(n));
  }
}

/// Exponent vector of length n (1 <= n <= 3). Used both for x-monomials and
/// for derivative orders.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(int dim) : dim_(dim) { check_dim(dim); }
  MultiIndex(std::initializer_list<int> exps) : dim_(static_cast<int>(exps.size())) {
    check_dim(dim_);
    int i = 0;
    for (int e : exps) {
      if (e < 0) throw DomainError("negative multi-index entry");
      e_[i++] = e;
    }
  }

  static MultiIndex unit(int dim, int r, int k = 1) {
    MultiIndex out(dim);
    out.e_[r] = k;
    return out;
  }

  int dim() const { return dim_; }
  int operator[](int i) const { return e_[i]; }
  int& operator[](int i) { return e_[i]; }

  int order() const {
    int s = 0;
    for (int i = 0; i < dim_; ++i) s += e_[i];
    return s;
  }

  bool is_even() const {
    for (int i = 0; i < dim_; ++i)
      if (e_[i] % 2 != 0) return false;
    return true;
  }

  /// Componentwise <=.
  bool below(const MultiIndex& other) const {
    for (int i = 0; i < dim_; ++i)
      if (e_[i] > other.e_[i]) return false;
    return true;
  }

  MultiIndex operator+(const MultiIndex& o) const {
    MultiIndex out(*this);
    for (int i = 0; i < dim_; ++i) out.e_[i] += o.e_[i];
    return out;
  }

  MultiIndex operator-(const MultiIndex& o) const {
    MultiIndex out(*this);
    for (int i = 0; i < dim_; ++i) out.e_[i] -= o.e_[i];
    return out;
  }

  MultiIndex half() const {
    MultiIndex out(*this);
    for (int i = 0; i < dim_; ++i) out.e_[i] /= 2;
    return out;
  }

  auto operator<=>(const MultiIndex&) const = default;

 private:
  std::array<int, kMaxDim> e_{};
  int dim_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const MultiIndex& a) {
  os << '(';
  for (int i = 0; i < a.dim(); ++i) os << (i ? "," : "") << a[i];
  return os << ')';
}

inline Integer multi_factorial(const MultiIndex& a) {
  Integer out = 1;
  for (int i = 0; i < a.dim(); ++i) out *= factorial(static_cast<unsigned long>(a[i]));
  return out;
}

/// Product of binomials C(alpha_i, gamma_i).
inline Integer multi_binomial(const MultiIndex& alpha, const MultiIndex& gamma) {
  Integer out = 1;
  for (int i = 0; i < alpha.dim(); ++i)
    out *= binomial(static_cast<unsigned long>(alpha[i]), static_cast<unsigned long>(gamma[i]));
  return out;
}

/// Calls f(gamma) for every gamma with 0 <= gamma <= alpha componentwise.
template <typename F>
void for_each_below(const MultiIndex& alpha, F&& f) {
  MultiIndex g(alpha.dim());
  while (true) {
    f(static_cast<const MultiIndex&>(g));
    int i = 0;
    while (i < alpha.dim()) {
      if (g[i] < alpha[i]) {
        ++g[i];
        break;
      }
      g[i] = 0;
      ++i;
    }
    if (i == alpha.dim()) return;
  }
}

/// Calls f(alpha) for every alpha of length dim with |alpha| == order.
template <typename F>
void for_each_of_order(int dim, int order, F&& f) {
  MultiIndex a(dim);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == dim - 1) {
      a[pos] = left;
      f(static_cast<const MultiIndex&>(a));
      return;
    }
    for (int k = left; k >= 0; --k) {
      a[pos] = k;
      self(self, pos + 1, left - k);
    }
  };
  rec(rec, 0, order);
}

}  // namespace hkexp
