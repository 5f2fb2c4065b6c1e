#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "cat0lab/errors.hpp"

namespace cat0lab {

/// Exact rational with 64-bit numerator/denominator. All arithmetic is
/// checked through 128-bit intermediates; overflow raises ResourceError
/// instead of silently losing exactness.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(std::int64_t n) : num_(n), den_(1) {}
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    if (a.den_ == b.den_)
      return from_checked(__int128(a.num_) + b.num_, a.den_);
    return from_checked(__int128(a.num_) * b.den_ + __int128(b.num_) * a.den_,
                        __int128(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return a + Rational(-b.num_, b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    // Cross-reduce first so products of already-reduced measures stay small.
    std::int64_t g1 = std::gcd(a.num_ < 0 ? -a.num_ : a.num_, b.den_);
    std::int64_t g2 = std::gcd(b.num_ < 0 ? -b.num_ : b.num_, a.den_);
    return from_checked(__int128(a.num_ / (g1 ? g1 : 1)) * (b.num_ / (g2 ? g2 : 1)),
                        __int128(a.den_ / (g2 ? g2 : 1)) * (b.den_ / (g1 ? g1 : 1)));
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw DomainError("Rational: division by zero");
    return a * Rational(b.den_, b.num_);
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return __int128(a.num_) * b.den_ < __int128(b.num_) * a.den_;
  }
  friend bool operator<=(const Rational& a, const Rational& b) {
    return __int128(a.num_) * b.den_ <= __int128(b.num_) * a.den_;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }

 private:
  static Rational from_checked(__int128 n, __int128 d) {
    if (d == 0) throw DomainError("Rational: zero denominator");
    if (d < 0) { n = -n; d = -d; }
    __int128 an = n < 0 ? -n : n;
    __int128 g = gcd128(an, d);
    if (g > 1) { n /= g; d /= g; }
    constexpr __int128 lim = INT64_MAX;
    if (n > lim || n < -lim || d > lim)
      throw ResourceError("Rational: 64-bit overflow in exact arithmetic");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) { __int128 t = a % b; a = b; b = t; }
    return a;
  }

  void normalize() {
    Rational r = from_checked(num_, den_);
    num_ = r.num_;
    den_ = r.den_;
  }

  std::int64_t num_;
  std::int64_t den_;  // > 0
};

}  // namespace cat0lab
