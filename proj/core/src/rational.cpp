#include "linimp/rational.hpp"

#include <cctype>
#include <cmath>

#include "linimp/errors.hpp"

namespace linimp {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

BigInt pow10(long e) {
  BigInt r = 1;
  for (long i = 0; i < e; ++i) r *= 10;
  return r;
}

// Decimal literal: [sign] digits [. digits] [e [sign] digits]
bool parse_decimal(std::string_view text, Rational& out) {
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  long exponent = 0;
  if (auto epos = text.find_first_of("eE"); epos != std::string_view::npos) {
    std::string_view exp_part = text.substr(epos + 1);
    text = text.substr(0, epos);
    bool exp_negative = false;
    if (!exp_part.empty() && (exp_part.front() == '-' || exp_part.front() == '+')) {
      exp_negative = exp_part.front() == '-';
      exp_part.remove_prefix(1);
    }
    if (!all_digits(exp_part) || exp_part.size() > 6) return false;
    exponent = std::stol(std::string(exp_part));
    if (exp_negative) exponent = -exponent;
  }
  std::string_view int_part = text;
  std::string_view frac_part;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    int_part = text.substr(0, dot);
    frac_part = text.substr(dot + 1);
  }
  if (int_part.empty() && frac_part.empty()) return false;
  if (!int_part.empty() && !all_digits(int_part)) return false;
  if (!frac_part.empty() && !all_digits(frac_part)) return false;

  std::string digit_text = std::string(int_part) + std::string(frac_part);
  // cpp_int reads a leading zero as an octal prefix.
  const auto first = digit_text.find_first_not_of('0');
  digit_text = first == std::string::npos ? "0" : digit_text.substr(first);
  const BigInt digits(digit_text);
  exponent -= static_cast<long>(frac_part.size());
  Rational value = exponent >= 0 ? Rational(digits * pow10(exponent))
                                 : Rational(digits, pow10(-exponent));
  out = negative ? Rational(-value) : value;
  return true;
}

bool try_parse(std::string_view text, Rational& out) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) return false;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num;
    Rational den;
    std::string_view n = text.substr(0, slash);
    std::string_view d = text.substr(slash + 1);
    if (!parse_decimal(n, num) || !parse_decimal(d, den) || den == 0) return false;
    out = num / den;
    return true;
  }
  return parse_decimal(text, out);
}

}  // namespace

Rational parse_rational(std::string_view text) {
  Rational r;
  if (!try_parse(text, r)) {
    throw InvalidArgument("not a rational literal: '" + std::string(text) + "'");
  }
  return r;
}

bool is_rational_literal(std::string_view text) {
  Rational r;
  return try_parse(text, r);
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::string to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

Rational reconstruct_rational(double x, std::int64_t max_denominator) {
  if (!std::isfinite(x)) throw InvalidArgument("cannot reconstruct a non-finite value");
  // Continued fraction expansion of the exact binary value of x.
  const bool negative = x < 0;
  double ax = std::fabs(x);
  int exp2 = 0;
  const double mant = std::frexp(ax, &exp2);
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
  Rational exact = exp2 - 53 >= 0 ? Rational(BigInt(scaled) << (exp2 - 53))
                                  : Rational(BigInt(scaled), BigInt(1) << (53 - exp2));

  BigInt p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  Rational rem = exact;
  Rational best = 0;
  while (true) {
    const BigInt a = boost::multiprecision::numerator(rem) / boost::multiprecision::denominator(rem);
    const BigInt q2 = a * q1 + q0;
    if (q2 > max_denominator) {
      // Largest admissible semiconvergent.
      const BigInt k = (BigInt(max_denominator) - q0) / q1;
      const Rational semi(k * p1 + p0, k * q1 + q0);
      const Rational conv(p1, q1);
      best = abs(semi - exact) < abs(conv - exact) ? semi : conv;
      break;
    }
    const BigInt p2 = a * p1 + p0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const Rational frac = rem - Rational(a);
    if (frac == 0) {
      best = Rational(p1, q1);
      break;
    }
    rem = 1 / frac;
  }
  return negative ? Rational(-best) : best;
}

}  // namespace linimp
