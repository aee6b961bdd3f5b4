#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "hkexp/error.hpp"

namespace hkexp::mehler {

namespace detail {

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

inline void require_time_change(double s, double hbar) {
  require_positive(s, "s");
  require_positive(hbar, "hbar");
  if (!(hbar * s < 1.0)) throw DomainError("time change needs hbar * s < 1");
}

inline double norm2(std::span<const double> x) {
  double r = 0.0;
  for (double v : x) r += v * v;
  return r;
}

inline void require_same_size(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw DimensionMismatch("kernel points must have the same nonzero dimension");
}

}  // namespace detail

/// s = (1/hbar) (1 - e^{-t hbar}) / (1 + e^{-t hbar}) = tanh(t hbar / 2) / hbar.
inline double s_of_t(double t, double hbar) {
  detail::require_positive(t, "t");
  detail::require_positive(hbar, "hbar");
  return std::tanh(0.5 * t * hbar) / hbar;
}

/// t = (1/hbar) log((1 + hbar s) / (1 - hbar s)), the inverse of s_of_t.
inline double t_of_s(double s, double hbar) {
  detail::require_time_change(s, hbar);
  return 2.0 * std::atanh(hbar * s) / hbar;
}

/// Diagonal free-kernel normalization P(s, hbar) = (4 pi hbar^2 s)^{-n/2} (1 + hbar s)^n.
inline double prefactor(double s, double hbar, int n) {
  detail::require_time_change(s, hbar);
  if (n < 1) throw DomainError("dimension must be >= 1");
  return std::pow(4.0 * std::numbers::pi * hbar * hbar * s, -0.5 * n) * std::pow(1.0 + hbar * s, n);
}

/// Exponent of the kernel written with heat time t:
///   -1/(hbar (1 - e^{-2 hbar t})) [ (|x|^2+|y|^2)/2 (1 + e^{-2 hbar t}) - 2 e^{-t hbar} x.y ].
inline double exponent_bracket(std::span<const double> x, std::span<const double> y, double t, double hbar) {
  detail::require_same_size(x, y);
  detail::require_positive(t, "t");
  detail::require_positive(hbar, "hbar");
  double xy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) xy += x[i] * y[i];
  const double q = std::exp(-t * hbar);
  const double bracket = 0.5 * (detail::norm2(x) + detail::norm2(y)) * (1.0 + q * q) - 2.0 * q * xy;
  return bracket / (hbar * std::expm1(-2.0 * hbar * t));
}

/// Same exponent after completing squares:
///   -(|x|^2+|y|^2)/(2 hbar) (1-q)/(1+q) - q/(hbar (1-q)(1+q)) |x-y|^2,  q = e^{-t hbar}.
inline double exponent_split(std::span<const double> x, std::span<const double> y, double t, double hbar) {
  detail::require_same_size(x, y);
  detail::require_positive(t, "t");
  detail::require_positive(hbar, "hbar");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  const double q = std::exp(-t * hbar);
  const double one_minus_q = -std::expm1(-t * hbar);
  return -0.5 * (detail::norm2(x) + detail::norm2(y)) / hbar * one_minus_q / (1.0 + q) -
         q / (hbar * one_minus_q * (1.0 + q)) * d2;
}

/// Exponent in the rescaled time s:  -|x-y|^2 / (4 hbar^2 s) - s |x+y|^2 / 4.
inline double exponent(std::span<const double> x, std::span<const double> y, double s, double hbar) {
  detail::require_same_size(x, y);
  detail::require_time_change(s, hbar);
  double d2 = 0.0, p2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d2 += (x[i] - y[i]) * (x[i] - y[i]);
    p2 += (x[i] + y[i]) * (x[i] + y[i]);
  }
  return -d2 / (4.0 * hbar * hbar * s) - 0.25 * s * p2;
}

/// Schwartz kernel of e^{-tA}, A = -hbar^2 Delta/2 + |x|^2/2 - n hbar/2, in the rescaled time s.
inline double kernel_eval(std::span<const double> x, std::span<const double> y, double s, double hbar) {
  const int n = static_cast<int>(x.size());
  return prefactor(s, hbar, n) * std::exp(exponent(x, y, s, hbar));
}

/// The same kernel parametrized by heat time t.
inline double kernel_at_time(std::span<const double> x, std::span<const double> y, double t, double hbar) {
  return kernel_eval(x, y, s_of_t(t, hbar), hbar);
}

/// On-diagonal kernel e^{-tA}(x, x) = P(s, hbar) e^{-s|x|^2}.
inline double kernel_diag(std::span<const double> x, double s, double hbar) {
  return prefactor(s, hbar, static_cast<int>(x.size())) * std::exp(-s * detail::norm2(x));
}

/// tr e^{-tA} = (sum_k e^{-t hbar k})^n = ((1 + hbar s) / (2 hbar s))^n.
inline double free_trace(double s, double hbar, int n) {
  detail::require_time_change(s, hbar);
  if (n < 1) throw DomainError("dimension must be >= 1");
  return std::pow((1.0 + hbar * s) / (2.0 * hbar * s), n);
}

}  // namespace hkexp::mehler
