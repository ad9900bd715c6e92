#pragma once

// Exact arithmetic carriers used by every protocol:
//
//  * Fixed        unsigned real with 64 fractional bits (plain, no modulus)
//  * ModReal      real in [0, m) on the 2^-64 lattice, arithmetic mod m
//  * WideModReal  real in [0, m) on the 2^-128 lattice; holds exact products
//                 of two ModReal values
//  * FieldElem    element of F_p for a prime p < 2^61
//
// Additions and subtractions are exact on the lattice. Nothing here touches
// floating point except the explicit from_double / to_double conversions.

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>

#include <boost/multiprecision/cpp_int.hpp>

#include "riskagg/errors.hpp"

namespace riskagg {

using u128 = unsigned __int128;
using i128 = __int128;
using u256 = boost::multiprecision::uint256_t;
using BigInt = boost::multiprecision::cpp_int;

inline constexpr unsigned kFracBits = 64;
inline constexpr u128 kOne = u128{1} << kFracBits;

namespace detail {

// Nearest integer to num / den, ties away from zero. den > 0.
inline BigInt round_div(const BigInt& num, const BigInt& den) {
  BigInt q = abs(num) / den;
  BigInt r = abs(num) % den;
  if (2 * r >= den) ++q;
  return num < 0 ? BigInt(-q) : q;
}

inline i128 to_i128(const BigInt& v) {
  static const BigInt kMax = (BigInt(1) << 127) - 1;
  if (v > kMax || v < -kMax) throw RangeError("value exceeds the 128-bit fixed-point range");
  const BigInt mag = abs(v);
  const u128 lo = static_cast<std::uint64_t>(mag & 0xFFFFFFFFFFFFFFFFULL);
  const u128 hi = static_cast<std::uint64_t>(mag >> 64);
  const auto out = static_cast<i128>((hi << 64) | lo);
  return v < 0 ? -out : out;
}

inline BigInt from_u128(u128 v) {
  BigInt out = static_cast<std::uint64_t>(v >> 64);
  out <<= 64;
  out += static_cast<std::uint64_t>(v);
  return out;
}

// Exact decimal literal "[+-]digits[.digits]" as (numerator, 10^scale).
struct DecimalParts {
  BigInt numerator;
  BigInt denominator;
};

inline DecimalParts parse_decimal(std::string_view text) {
  auto fail = [&] { return RangeError("not a decimal number: '" + std::string(text) + "'"); };
  std::size_t i = 0;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  std::size_t end = text.size();
  while (end > i && (text[end - 1] == ' ' || text[end - 1] == '\t' || text[end - 1] == '\r'))
    --end;
  bool negative = false;
  if (i < end && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';
  BigInt num = 0;
  BigInt den = 1;
  bool any_digit = false;
  bool seen_point = false;
  int exponent = 0;
  for (; i < end; ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      num = num * 10 + (c - '0');
      if (seen_point) den *= 10;
      any_digit = true;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else if ((c == 'e' || c == 'E') && any_digit) {
      const std::string rest(text.substr(i + 1, end - i - 1));
      std::size_t used = 0;
      try {
        exponent = std::stoi(rest, &used);
      } catch (const std::exception&) {
        throw fail();
      }
      if (used != rest.size() || exponent > 60 || exponent < -60) throw fail();
      i = end;
      break;
    } else {
      throw fail();
    }
  }
  if (!any_digit) throw fail();
  for (; exponent > 0; --exponent) num *= 10;
  for (; exponent < 0; ++exponent) den *= 10;
  if (negative) num = -num;
  return {num, den};
}

}  // namespace detail

/// Unsigned fixed-point real, value = raw / 2^64.
class Fixed {
 public:
  constexpr Fixed() = default;

  static constexpr Fixed from_raw(u128 raw) { return Fixed(raw); }
  static constexpr Fixed from_integer(std::uint64_t k) { return Fixed(u128{k} << kFracBits); }

  /// Nearest lattice point to a nonnegative double.
  static Fixed from_double(double v);

  /// Nearest lattice point to a nonnegative decimal literal.
  static Fixed from_decimal(std::string_view text);

  /// Nearest lattice point to value / bound, both decimal literals.
  static Fixed ratio(std::string_view value, std::string_view bound);

  constexpr u128 raw() const { return raw_; }
  double to_double() const { return std::ldexp(static_cast<double>(raw_), -int(kFracBits)); }

  /// Exact decimal rendering rounded to `digits` fractional digits.
  std::string to_string(int digits = 18) const;

  friend constexpr Fixed operator+(Fixed a, Fixed b) {
    if (a.raw_ > std::numeric_limits<u128>::max() - b.raw_)
      throw RangeError("fixed-point overflow");
    return Fixed(a.raw_ + b.raw_);
  }
  friend constexpr auto operator<=>(Fixed, Fixed) = default;

 private:
  constexpr explicit Fixed(u128 raw) : raw_(raw) {}
  u128 raw_ = 0;
};

inline Fixed Fixed::from_double(double v) {
  if (!std::isfinite(v) || v < 0) throw RangeError("fixed-point value must be finite and >= 0");
  if (v >= std::ldexp(1.0, 63)) throw RangeError("value exceeds the 128-bit fixed-point range");
  if (v == 0) return Fixed{};
  int exp = 0;
  const double mant = std::frexp(v, &exp);  // v = mant * 2^exp, mant in [0.5, 1)
  const auto m53 = static_cast<std::uint64_t>(std::ldexp(mant, 53));
  const int shift = exp - 53 + int(kFracBits);
  if (shift >= 0) return Fixed(u128{m53} << shift);
  if (shift <= -64) return Fixed{};
  const std::uint64_t half = std::uint64_t{1} << (-shift - 1);
  return Fixed((u128{m53} + half) >> -shift);
}

inline Fixed Fixed::from_decimal(std::string_view text) {
  const auto parts = detail::parse_decimal(text);
  if (parts.numerator < 0) throw RangeError("fixed-point value must be >= 0");
  const BigInt raw = detail::round_div(parts.numerator << kFracBits, parts.denominator);
  return Fixed(static_cast<u128>(detail::to_i128(raw)));
}

inline Fixed Fixed::ratio(std::string_view value, std::string_view bound) {
  const auto v = detail::parse_decimal(value);
  const auto b = detail::parse_decimal(bound);
  if (b.numerator <= 0) throw RangeError("scale bound must be > 0");
  if (v.numerator < 0) throw RangeError("value must be >= 0");
  const BigInt raw =
      detail::round_div((v.numerator * b.denominator) << kFracBits, v.denominator * b.numerator);
  return Fixed(static_cast<u128>(detail::to_i128(raw)));
}

inline std::string Fixed::to_string(int digits) const {
  BigInt scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const BigInt scaled = detail::round_div(detail::from_u128(raw_) * scale, BigInt(1) << kFracBits);
  std::string whole = BigInt(scaled / scale).str();
  if (digits == 0) return whole;
  std::string frac = BigInt(scaled % scale).str();
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  return whole + "." + frac;
}

/// Real number on the 2^-FracBits lattice reduced into [0, modulus).
template <class Raw, unsigned FracBits>
class BasicModReal {
 public:
  using raw_type = Raw;
  static constexpr unsigned frac_bits = FracBits;

  BasicModReal() = default;

  /// Reduces `raw` into [0, modulus * 2^FracBits).
  static BasicModReal from_raw(const Raw& raw, std::uint64_t modulus) {
    check_modulus(modulus);
    const Raw s = span_of(modulus);
    return BasicModReal(raw >= s ? Raw(raw % s) : raw, modulus);
  }

  static BasicModReal zero(std::uint64_t modulus) { return from_raw(Raw(0), modulus); }

  static BasicModReal from_integer(std::uint64_t k, std::uint64_t modulus) {
    return from_raw(Raw(k % modulus) << FracBits, modulus);
  }

  const Raw& raw() const { return raw_; }
  std::uint64_t modulus() const { return modulus_; }
  Raw span() const { return span_of(modulus_); }

  double to_double() const {
    if constexpr (std::is_same_v<Raw, u128>) {
      return std::ldexp(static_cast<double>(raw_), -int(FracBits));
    } else {
      return std::ldexp(raw_.template convert_to<double>(), -int(FracBits));
    }
  }

  friend BasicModReal operator+(const BasicModReal& a, const BasicModReal& b) {
    same_modulus(a, b);
    const Raw s = a.span();
    // a + b mod s without overflowing Raw.
    const Raw room = s - b.raw_;
    return BasicModReal(a.raw_ >= room ? Raw(a.raw_ - room) : Raw(a.raw_ + b.raw_), a.modulus_);
  }

  friend BasicModReal operator-(const BasicModReal& a, const BasicModReal& b) {
    same_modulus(a, b);
    return BasicModReal(a.raw_ >= b.raw_ ? Raw(a.raw_ - b.raw_) : Raw(a.span() - (b.raw_ - a.raw_)),
                        a.modulus_);
  }

  BasicModReal operator-() const { return zero(modulus_) - *this; }

  BasicModReal& operator+=(const BasicModReal& o) { return *this = *this + o; }
  BasicModReal& operator-=(const BasicModReal& o) { return *this = *this - o; }

  /// k * this mod m for an integer k.
  BasicModReal scaled(std::uint64_t k) const {
    BasicModReal acc = zero(modulus_);
    BasicModReal base = *this;
    while (k != 0) {
      if (k & 1) acc += base;
      base += base;
      k >>= 1;
    }
    return acc;
  }

  friend bool operator==(const BasicModReal&, const BasicModReal&) = default;

 private:
  BasicModReal(const Raw& raw, std::uint64_t modulus) : raw_(raw), modulus_(modulus) {}

  static Raw span_of(std::uint64_t modulus) { return Raw(modulus) << FracBits; }

  static void check_modulus(std::uint64_t modulus) {
    if (modulus == 0) throw ArithmeticError("modulus must be >= 1");
  }

  static void same_modulus(const BasicModReal& a, const BasicModReal& b) {
    if (a.modulus_ != b.modulus_) throw ArithmeticError("mod-real modulus mismatch");
  }

  Raw raw_{0};
  std::uint64_t modulus_ = 1;
};

using ModReal = BasicModReal<u128, 64>;
using WideModReal = BasicModReal<u256, 128>;

/// Unique representative of a mod m in [0, m); a is a signed raw value with
/// 64 fractional bits.
inline ModReal mod_real_raw(i128 signed_raw, std::uint64_t m) {
  if (m == 0) throw ArithmeticError("modulus must be >= 1");
  const i128 s = static_cast<i128>(u128{m} << kFracBits);
  i128 r = signed_raw % s;
  if (r < 0) r += s;
  return ModReal::from_raw(static_cast<u128>(r), m);
}

inline ModReal mod_real(Fixed a, std::uint64_t m) { return ModReal::from_raw(a.raw(), m); }

inline ModReal mod_real(double a, std::uint64_t m) {
  if (!std::isfinite(a)) throw RangeError("mod_real input must be finite");
  const Fixed mag = Fixed::from_double(std::fabs(a));
  const auto raw = static_cast<i128>(mag.raw());
  return mod_real_raw(a < 0 ? -raw : raw, m);
}

inline ModReal mod_real_decimal(std::string_view text, std::uint64_t m) {
  const auto parts = detail::parse_decimal(text);
  const BigInt raw = detail::round_div(parts.numerator << kFracBits, parts.denominator);
  return mod_real_raw(detail::to_i128(raw), m);
}

inline WideModReal widen(const ModReal& a) {
  return WideModReal::from_raw(u256(a.raw()) << 64, a.modulus());
}

/// Exact product a*b mod m on the 2^-128 lattice. Requires m < 2^32 so the
/// unreduced product fits in 256 bits.
inline WideModReal mul_wide(const ModReal& a, const ModReal& b) {
  if (a.modulus() != b.modulus()) throw ArithmeticError("mod-real modulus mismatch");
  if (a.modulus() >= (std::uint64_t{1} << 32)) throw RangeError("wide product requires modulus < 2^32");
  return WideModReal::from_raw(u256(a.raw()) * u256(b.raw()), a.modulus());
}

/// Nearest 2^-64 lattice point (ties up), reduced mod m.
inline ModReal round_to_lattice(const WideModReal& w) {
  const u256 rounded = (w.raw() + (u256(1) << 63)) >> 64;
  return ModReal::from_raw(static_cast<u128>(rounded % (u256(w.modulus()) << 64)), w.modulus());
}

// ---------------------------------------------------------------------------
// Prime fields

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(u128{a} * b % m);
}

inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t acc = 1 % m;
  base %= m;
  while (exp != 0) {
    if (exp & 1) acc = mul_mod(acc, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return acc;
}

/// Deterministic Miller-Rabin, exact for every 64-bit input.
inline bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t small : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % small == 0) return n == small;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    std::uint64_t x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// Largest prime below 2^61 (a Mersenne prime).
inline constexpr std::uint64_t kDefaultPrime = (std::uint64_t{1} << 61) - 1;
inline constexpr std::uint64_t kMaxPrime = kDefaultPrime;

/// Smallest safe field for inner products of n codes drawn from Z_q: returns
/// the default prime after checking it exceeds n*q^2.
inline std::uint64_t default_prime(std::uint64_t n, std::uint64_t q) {
  const u128 bound = u128{n} * q * q;
  if (bound >= kDefaultPrime) throw ConfigError("n*q^2 too large for a 61-bit prime field");
  return kDefaultPrime;
}

class FieldElem {
 public:
  FieldElem() = default;

  FieldElem(std::uint64_t value, std::uint64_t p) : value_(value % p), p_(p) {
    if (p < 2 || p > kMaxPrime) throw ArithmeticError("field modulus must be in [2, 2^61)");
  }

  std::uint64_t value() const { return value_; }
  std::uint64_t modulus() const { return p_; }

  friend FieldElem operator+(FieldElem a, FieldElem b) {
    check(a, b);
    const std::uint64_t s = a.value_ + b.value_;  // < 2^62, no overflow
    return FieldElem(s >= a.p_ ? s - a.p_ : s, a.p_, raw_tag{});
  }
  friend FieldElem operator-(FieldElem a, FieldElem b) {
    check(a, b);
    return FieldElem(a.value_ >= b.value_ ? a.value_ - b.value_ : a.p_ - (b.value_ - a.value_),
                     a.p_, raw_tag{});
  }
  friend FieldElem operator*(FieldElem a, FieldElem b) {
    check(a, b);
    return FieldElem(mul_mod(a.value_, b.value_, a.p_), a.p_, raw_tag{});
  }
  FieldElem operator-() const { return FieldElem(0, p_, raw_tag{}) - *this; }
  FieldElem& operator+=(FieldElem o) { return *this = *this + o; }
  FieldElem& operator-=(FieldElem o) { return *this = *this - o; }
  FieldElem& operator*=(FieldElem o) { return *this = *this * o; }

  FieldElem pow(std::uint64_t e) const { return FieldElem(pow_mod(value_, e, p_), p_, raw_tag{}); }

  /// Multiplicative inverse via Fermat's little theorem; p must be prime.
  FieldElem inv() const {
    if (value_ == 0) throw ArithmeticError("inverse of zero");
    return pow(p_ - 2);
  }

  friend bool operator==(const FieldElem&, const FieldElem&) = default;

 private:
  struct raw_tag {};
  FieldElem(std::uint64_t v, std::uint64_t p, raw_tag) : value_(v), p_(p) {}

  static void check(const FieldElem& a, const FieldElem& b) {
    if (a.p_ != b.p_) throw ArithmeticError("field modulus mismatch");
  }

  std::uint64_t value_ = 0;
  std::uint64_t p_ = 2;
};

// ---------------------------------------------------------------------------
// Quantization of [-1, 1] onto symmetric signed codes

class QuantParams {
 public:
  explicit QuantParams(std::uint64_t q) : q_(q) {
    if (q < 3 || q % 2 == 0) throw ConfigError("quantization level q must be odd and >= 3");
  }
  std::uint64_t q() const { return q_; }
  std::int64_t half() const { return static_cast<std::int64_t>((q_ - 1) / 2); }
  double step() const { return 2.0 / static_cast<double>(q_ - 1); }

 private:
  std::uint64_t q_;
};

/// round(u * half), with u clamped to [-1, 1]; ties away from zero so the map
/// is odd-symmetric.
inline std::int64_t quantize(double u, const QuantParams& params) {
  if (std::isnan(u)) throw RangeError("cannot quantize NaN");
  const double clamped = std::clamp(u, -1.0, 1.0);
  return static_cast<std::int64_t>(std::llround(clamped * static_cast<double>(params.half())));
}

inline double dequantize(std::int64_t code, const QuantParams& params) {
  return static_cast<double>(code) / static_cast<double>(params.half());
}

/// c mod p for |c| < p/2.
inline FieldElem signed_embed(std::int64_t code, std::uint64_t p) {
  const std::uint64_t mag = code < 0 ? static_cast<std::uint64_t>(-(code + 1)) + 1
                                     : static_cast<std::uint64_t>(code);
  if (2 * u128{mag} >= p)
    throw RangeError("signed code out of range for the field");
  return code < 0 ? FieldElem(p - mag, p) : FieldElem(mag, p);
}

/// Canonical signed representative in (-p/2, p/2).
inline std::int64_t signed_decode(FieldElem e) {
  const std::uint64_t v = e.value();
  const std::uint64_t p = e.modulus();
  if (2 * u128{v} < p) return static_cast<std::int64_t>(v);
  return -static_cast<std::int64_t>(p - v);
}

}  // namespace riskagg
