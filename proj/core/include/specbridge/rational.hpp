// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace specbridge {

/// Arbitrary-precision rational, always kept in lowest terms.
using Rational = mpq_class;

/// Parses a decimal literal such as "3.25", "-4", "1e-3" or a ratio "13/4".
/// Throws std::invalid_argument on malformed input.
Rational parseRational(std::string_view text);

/// Exact rational equal to the binary value of `value`.
Rational rationalFromDouble(double value);

/// Rational with the same shortest decimal spelling as `value` (0.1 -> 1/10).
Rational rationalFromDecimalDouble(double value);

/// "n/d", or "n" when the denominator is one.
std::string toFractionString(const Rational& value);

/// Terminating decimal spelling if one exists ("3.25", "-4.0"); empty otherwise.
std::string toDecimalString(const Rational& value);

double toDouble(const Rational& value);

/// n / d in lowest terms; mpq_class(n, d) alone does not canonicalise.
inline Rational ratio(long n, long d) {
  Rational r(n, d);
  r.canonicalize();
  return r;
}

inline bool isInteger(const Rational& value) { return value.get_den() == 1; }

} // namespace specbridge
