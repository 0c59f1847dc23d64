#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace linimp {

/// Arbitrary precision rational, always kept in lowest terms with a positive
/// denominator.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "p", "p/q" or a finite decimal such as "-0.125" or "2.5e-3" into an
/// exact rational. Throws InvalidArgument on anything else.
Rational parse_rational(std::string_view text);

/// True when `text` parses as an exact rational literal.
bool is_rational_literal(std::string_view text);

double to_double(const Rational& r);

/// "p/q", or "p" when the denominator is one.
std::string to_string(const Rational& r);

/// Best rational approximation of `x` with denominator at most
/// `max_denominator` (continued fraction convergents and semiconvergents).
Rational reconstruct_rational(double x, std::int64_t max_denominator = 10'000'000);

}  // namespace linimp
