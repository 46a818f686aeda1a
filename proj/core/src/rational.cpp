// SPDX-License-Identifier: Apache-2.0
#include "specbridge/rational.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace specbridge {

namespace {

bool allDigits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

mpz_class pow10(unsigned long exponent) {
  mpz_class result;
  mpz_ui_pow_ui(result.get_mpz_t(), 10, exponent);
  return result;
}

} // namespace

Rational parseRational(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty numeral");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parseRational(text.substr(0, slash));
    Rational den = parseRational(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    Rational r = num / den;
    r.canonicalize();
    return r;
  }

  bool negative = false;
  std::string_view body = text;
  if (body.front() == '-' || body.front() == '+') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }

  long exponent = 0;
  if (auto e = body.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view expText = body.substr(e + 1);
    bool expNegative = false;
    if (!expText.empty() && (expText.front() == '-' || expText.front() == '+')) {
      expNegative = expText.front() == '-';
      expText.remove_prefix(1);
    }
    if (!allDigits(expText)) throw std::invalid_argument("malformed exponent in '" + std::string(text) + "'");
    auto [ptr, ec] = std::from_chars(expText.data(), expText.data() + expText.size(), exponent);
    if (ec != std::errc()) throw std::invalid_argument("exponent out of range in '" + std::string(text) + "'");
    if (expNegative) exponent = -exponent;
    body = body.substr(0, e);
  }

  std::string_view intPart = body;
  std::string_view fracPart;
  if (auto dot = body.find('.'); dot != std::string_view::npos) {
    intPart = body.substr(0, dot);
    fracPart = body.substr(dot + 1);
    if (!allDigits(fracPart)) throw std::invalid_argument("malformed numeral '" + std::string(text) + "'");
  }
  if (!allDigits(intPart)) throw std::invalid_argument("malformed numeral '" + std::string(text) + "'");

  mpz_class digits(std::string(intPart) + std::string(fracPart), 10);
  Rational r(digits, pow10(fracPart.size()));
  if (exponent > 0) r *= Rational(pow10(static_cast<unsigned long>(exponent)));
  if (exponent < 0) r /= Rational(pow10(static_cast<unsigned long>(-exponent)));
  r.canonicalize();
  return negative ? Rational(-r) : r;
}

Rational rationalFromDouble(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite value has no rational form");
  Rational r(value);
  r.canonicalize();
  return r;
}

Rational rationalFromDecimalDouble(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite value has no rational form");
  std::array<char, 64> buffer{};
  auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc()) throw std::invalid_argument("cannot format double");
  return parseRational(std::string_view(buffer.data(), static_cast<std::size_t>(ptr - buffer.data())));
}

std::string toFractionString(const Rational& value) {
  if (isInteger(value)) return value.get_num().get_str();
  return value.get_num().get_str() + "/" + value.get_den().get_str();
}

std::string toDecimalString(const Rational& value) {
  mpz_class den = value.get_den();
  unsigned long twos = 0;
  unsigned long fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
    den /= 2;
    ++twos;
  }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return {};

  unsigned long places = std::max(twos, fives);
  mpz_class scaled = value.get_num() * pow10(places) / value.get_den();
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string digits = scaled.get_str();
  if (digits.size() <= places) digits.insert(0, places + 1 - digits.size(), '0');
  std::string out = negative ? "-" : "";
  if (places == 0) return out + digits + ".0";
  out += digits.substr(0, digits.size() - places);
  out += '.';
  out += digits.substr(digits.size() - places);
  return out;
}

double toDouble(const Rational& value) { return value.get_d(); }

} // namespace specbridge
