#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "uniftest/error.hpp"

namespace uniftest {

/// Exact nonnegative-denominator fraction used for every eps threshold, so
/// that "far"/"close" and accept/reject decisions never depend on rounding.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value) {}  // NOLINT: implicit from integers
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw ValidationError("rational with zero denominator");
    normalize();
  }

  /// Accepts "3", "0.125", "1/8" and "-2/6".
  static Rational parse(std::string_view text) {
    auto fail = [&] { return ValidationError("not a rational number: '" + std::string(text) + "'"); };
    if (text.empty()) throw fail();
    auto to_int = [&](std::string_view s) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) throw fail();
      return v;
    };
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      return Rational(to_int(text.substr(0, slash)), to_int(text.substr(slash + 1)));
    }
    auto dot = text.find('.');
    if (dot == std::string_view::npos) return Rational(to_int(text));
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 15 || frac.find_first_not_of("0123456789") != std::string_view::npos) {
      throw fail();
    }
    bool negative = !whole.empty() && whole.front() == '-';
    if (negative) whole.remove_prefix(1);
    std::int64_t w = whole.empty() ? 0 : to_int(whole);
    if (w < 0) throw fail();
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    std::int64_t f = to_int(frac);
    std::int64_t num = w * scale + f;
    return Rational(negative ? -num : num, scale);
  }

  constexpr std::int64_t num() const noexcept { return num_; }
  constexpr std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  std::string to_string() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend Rational operator*(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw ValidationError("division by zero rational");
    return from_wide(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  friend Rational operator+(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                     static_cast<__int128>(a.den_) * b.den_);
  }

  friend bool operator==(const Rational& a, const Rational& b) noexcept {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) noexcept {
    return static_cast<__int128>(a.num_) * b.den_ <=> static_cast<__int128>(b.num_) * a.den_;
  }

 private:
  static Rational from_wide(__int128 num, __int128 den) {
    if (den == 0) throw ValidationError("rational with zero denominator");
    if (den < 0) num = -num, den = -den;
    __int128 a = num < 0 ? -num : num, b = den;
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) num /= a, den /= a;
    constexpr __int128 kMax = INT64_MAX;
    if (num > kMax || -num > kMax || den > kMax) throw ValidationError("rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
  }

  void normalize() {
    if (den_ < 0) num_ = -num_, den_ = -den_;
    auto g = std::gcd(num_, den_);
    if (g > 1) num_ /= g, den_ /= g;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// count > eps * total, evaluated without rounding.
inline bool exceeds(std::uint64_t count, const Rational& eps, std::uint64_t total) {
  return static_cast<__int128>(count) * eps.den() > static_cast<__int128>(eps.num()) * total;
}

/// count < eps * total, evaluated without rounding.
inline bool below(std::uint64_t count, const Rational& eps, std::uint64_t total) {
  return static_cast<__int128>(count) * eps.den() < static_cast<__int128>(eps.num()) * total;
}

/// Smallest integer strictly greater than eps * total.
inline std::uint64_t smallest_exceeding(const Rational& eps, std::uint64_t total) {
  __int128 prod = static_cast<__int128>(eps.num()) * total;
  if (prod < 0) return 0;
  return static_cast<std::uint64_t>(prod / eps.den()) + 1;
}

}  // namespace uniftest
