#pragma once

#include <gmpxx.h>

#include <json.hpp>

#include <string>

#include "hkexp/error.hpp"

namespace hkexp {

using Rational = mpq_class;
using Integer = mpz_class;

inline Rational rational(long num, long den = 1) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline Integer factorial(unsigned long k) {
  Integer out;
  mpz_fac_ui(out.get_mpz_t(), k);
  return out;
}

inline Integer binomial(unsigned long n, unsigned long k) {
  Integer out;
  mpz_bin_uiui(out.get_mpz_t(), n, k);
  return out;
}

/// (k-1)!! for even k, with (-1)!! = 1.
inline Integer odd_double_factorial(unsigned long k) {
  Integer out = 1;
  for (unsigned long j = 1; j < k; j += 2) out *= j;
  return out;
}

inline Rational rational_pow(const Rational& q, unsigned int e) {
  Rational out = 1;
  for (unsigned int i = 0; i < e; ++i) out *= q;
  return out;
}

namespace json_detail {

// Integers that fit in a signed 64-bit word are emitted as JSON numbers; larger
// ones fall back to decimal strings so that nothing is rounded.
inline nlohmann::json integer_to_json(const Integer& z) {
  if (z.fits_slong_p()) return nlohmann::json(z.get_si());
  return nlohmann::json(z.get_str());
}

inline Integer integer_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return Integer(std::to_string(j.get<long long>()));
  if (j.is_string()) {
    Integer z;
    if (z.set_str(j.get<std::string>(), 10) != 0) throw FormatError("bad integer literal");
    return z;
  }
  throw FormatError("expected an integer (number or decimal string)");
}

}  // namespace json_detail

inline void write_rational(nlohmann::json& out, const Rational& q) {
  out["num"] = json_detail::integer_to_json(q.get_num());
  out["den"] = json_detail::integer_to_json(q.get_den());
}

inline Rational read_rational(const nlohmann::json& in) {
  if (!in.contains("num")) throw FormatError("term without \"num\"");
  Integer num = json_detail::integer_from_json(in.at("num"));
  Integer den = in.contains("den") ? json_detail::integer_from_json(in.at("den")) : Integer(1);
  if (den == 0) throw FormatError("zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

}  // namespace hkexp
