// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/rational.hpp"

#include <random>

namespace specbridge::testing {

/// Random rational with denominator in [1, maxDen] and value in [lo, hi].
inline Rational randomRational(std::mt19937_64& rng, long lo, long hi, long maxDen = 16) {
  std::uniform_int_distribution<long> den(1, maxDen);
  long d = den(rng);
  std::uniform_int_distribution<long> num(lo * d, hi * d);
  Rational r(num(rng), d);
  r.canonicalize();
  return r;
}

} // namespace specbridge::testing
