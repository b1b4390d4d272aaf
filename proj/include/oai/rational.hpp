#pragma once

#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>

#include "oai/common.hpp"

namespace oai {

// Exact rational on int64 numerator / positive int64 denominator.
// The pipeline keeps score means, matrix cells and importance weights exact so
// golden outputs are bit-reproducible; magnitudes stay tiny in practice.
// Intermediate products go through __int128 and overflow is a hard error.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) { normalize(); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
    __int128 d = static_cast<__int128>(a.den_) * b.den_;
    return make(n, d);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    __int128 n = static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_;
    __int128 d = static_cast<__int128>(a.den_) * b.den_;
    return make(n, d);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw ComputeError("rational division by zero");
    return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }
  Rational operator-() const { Rational r = *this; r.num_ = -r.num_; return r; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // Nearest integer, ties away from zero.
  std::int64_t round_half_away_from_zero() const {
    __int128 twice = static_cast<__int128>(num_) * 2;
    __int128 d = den_;
    __int128 q;
    if (num_ >= 0) {
      q = (twice + d) / (2 * d);
    } else {
      q = (twice - d) / (2 * d);
      // C++ division truncates toward zero; adjust exact -x.5 to round away.
      if ((twice - d) % (2 * d) == 0) q = (twice - d) / (2 * d);
    }
    return static_cast<std::int64_t>(q);
  }

  // Fixed-point decimal string, `places` digits, rounded half away from zero.
  std::string to_decimal_string(int places) const {
    __int128 scale = 1;
    for (int i = 0; i < places; ++i) scale *= 10;
    __int128 scaled = static_cast<__int128>(num_) * scale;
    __int128 d = den_;
    bool neg = scaled < 0;
    if (neg) scaled = -scaled;
    __int128 q = (2 * scaled + d) / (2 * d);
    std::string digits;
    if (q == 0) digits = "0";
    while (q > 0) {
      digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(q % 10)));
      q /= 10;
    }
    while (static_cast<int>(digits.size()) < places + 1) digits.insert(digits.begin(), '0');
    std::string out;
    if (neg) out += '-';
    out += digits.substr(0, digits.size() - static_cast<std::size_t>(places));
    if (places > 0) {
      out += '.';
      out += digits.substr(digits.size() - static_cast<std::size_t>(places));
    }
    return out;
  }

  // Parses "12", "-3.5", "0.25". Plain decimal only, no exponents.
  static Rational from_decimal(std::string_view text) {
    std::size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      neg = text[i] == '-';
      ++i;
    }
    __int128 num = 0;
    __int128 den = 1;
    bool any_digit = false;
    bool seen_dot = false;
    for (; i < text.size(); ++i) {
      char c = text[i];
      if (c == '.') {
        if (seen_dot) throw ValidationError("invalid decimal: " + std::string(text));
        seen_dot = true;
        continue;
      }
      if (c < '0' || c > '9') throw ValidationError("invalid decimal: " + std::string(text));
      num = num * 10 + (c - '0');
      if (seen_dot) den *= 10;
      any_digit = true;
      if (num > static_cast<__int128>(std::numeric_limits<std::int64_t>::max()))
        throw ValidationError("decimal out of range: " + std::string(text));
    }
    if (!any_digit) throw ValidationError("invalid decimal: " + std::string(text));
    if (neg) num = -num;
    return make(num, den);
  }

  // Snaps a double known to carry at most 9 decimal digits back to the exact
  // rational it denotes (used for JSON-parsed matrix cells).
  static Rational from_double_decimal9(double v) {
    double scaled = v * 1e9;
    auto n = static_cast<std::int64_t>(scaled >= 0 ? scaled + 0.5 : scaled - 0.5);
    return Rational(n, 1000000000);
  }

 private:
  static Rational make(__int128 n, __int128 d) {
    Rational r;
    if (d == 0) throw ComputeError("rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    if (n > std::numeric_limits<std::int64_t>::max() || n < std::numeric_limits<std::int64_t>::min() ||
        d > std::numeric_limits<std::int64_t>::max())
      throw ComputeError("rational overflow");
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a == 0 ? 1 : a;
  }

  void normalize() { *this = make(num_, den_); }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace oai
