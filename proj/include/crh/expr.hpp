#pragma once

#include <string>

#include "crh/poly.hpp"

namespace crh {

// Parses the polynomial expression mini-language into a BigradedPoly.
//   variables   z, w, zbar, wbar
//   functions   conj(e), abs2(e)
//   operators   +, -, *, ^ (nonnegative integer powers), parentheses
//   literals    decimal reals and imaginary units: 1.5, 2i, i, 1+2i
// Malformed input raises InvalidInput with the offending position.
BigradedPoly parse_poly_expr(const std::string& text);

}  // namespace crh
