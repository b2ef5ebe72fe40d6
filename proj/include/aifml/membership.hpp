// Membership degree of a crisp value in a fuzzy term.
#pragma once

#include <algorithm>
#include <cmath>

#include "aifml/fml.hpp"

namespace aifml {

/// Degree of `x` in `mf`, in [0, 1]; `complement` yields 1 - mu(x).
/// Degenerate edges (a == b in a triangle, etc.) are vertical: the value at
/// the shared point is the plateau value.
template <typename Scalar>
Scalar membership_degree(const MembershipFunction& mf, bool complement, Scalar x) {
  const auto p = [&](std::size_t i) { return static_cast<Scalar>(mf.params[i]); };
  const Scalar zero(0), one(1);
  Scalar mu = zero;
  switch (mf.shape) {
    case Shape::triangular: {
      const Scalar a = p(0), b = p(1), c = p(2);
      if (x < a || x > c)
        mu = zero;
      else if (x <= b)
        mu = b > a ? (x - a) / (b - a) : one;
      else
        mu = c > b ? (c - x) / (c - b) : one;
      break;
    }
    case Shape::trapezoidal: {
      const Scalar a = p(0), b = p(1), c = p(2), d = p(3);
      if (x < a || x > d)
        mu = zero;
      else if (x < b)
        mu = (x - a) / (b - a);
      else if (x <= c)
        mu = one;
      else
        mu = (d - x) / (d - c);
      break;
    }
    case Shape::gaussian: {
      const Scalar z = (x - p(0)) / p(1);
      mu = std::exp(Scalar(-0.5) * z * z);
      break;
    }
    case Shape::singleton:
      mu = x == p(0) ? one : zero;
      break;
    case Shape::left_linear: {
      const Scalar a = p(0), b = p(1);
      mu = x <= a ? one : x >= b ? zero : (b - x) / (b - a);
      break;
    }
    case Shape::right_linear: {
      const Scalar a = p(0), b = p(1);
      mu = x <= a ? zero : x >= b ? one : (x - a) / (b - a);
      break;
    }
  }
  mu = std::clamp(mu, zero, one);
  return complement ? one - mu : mu;
}

}  // namespace aifml
