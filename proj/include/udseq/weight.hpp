#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "udseq/errors.hpp"

namespace udseq {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Scalar that remembers whether it is exact. Exact values (rationals)
// propagate through +,-,*,/; any operation that touches an inexact value
// collapses the result to double. Comparisons between two exact values
// are exact, everything else compares the double images.
class Weight {
public:
  Weight() : exact_(Rational(0)), value_(0.0) {}

  static Weight from_double(double v) {
    if (!std::isfinite(v)) throw MassError("weight is not finite");
    Weight w;
    w.exact_.reset();
    w.value_ = v;
    return w;
  }

  static Weight ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) throw MassError("weight denominator is zero");
    return Weight(Rational(num, den));
  }

  static Weight integer(std::int64_t n) { return Weight(Rational(n)); }

  // 2^-n as an exact rational.
  static Weight pow2(int exponent) {
    if (exponent < 0) throw RangeError("pow2 exponent must be nonnegative");
    return Weight(Rational(BigInt(1), BigInt(1) << exponent));
  }

  explicit Weight(Rational r) : exact_(std::move(r)) {
    value_ = exact_->convert_to<double>();
  }

  bool exact() const { return exact_.has_value(); }
  double value() const { return value_; }
  const Rational& rat() const {
    if (!exact_) throw Error("weight is not exact");
    return *exact_;
  }

  // Exact rational image; inexact weights convert via the exact binary
  // expansion of the double.
  Rational rationalized() const {
    if (exact_) return *exact_;
    return Rational(value_);
  }

  bool negative() const {
    return exact_ ? (*exact_ < 0) : (value_ < 0.0);
  }
  bool is_zero() const {
    return exact_ ? (*exact_ == 0) : (value_ == 0.0);
  }

  Weight operator+(const Weight& o) const {
    if (exact_ && o.exact_) return Weight(*exact_ + *o.exact_);
    return from_double(value_ + o.value_);
  }
  Weight operator-(const Weight& o) const {
    if (exact_ && o.exact_) return Weight(*exact_ - *o.exact_);
    return from_double(value_ - o.value_);
  }
  Weight operator*(const Weight& o) const {
    if (exact_ && o.exact_) return Weight(*exact_ * *o.exact_);
    return from_double(value_ * o.value_);
  }
  Weight operator/(const Weight& o) const {
    if (o.is_zero()) throw MassError("division of weight by zero");
    if (exact_ && o.exact_) return Weight(*exact_ / *o.exact_);
    return from_double(value_ / o.value_);
  }
  Weight& operator+=(const Weight& o) { return *this = *this + o; }
  Weight& operator-=(const Weight& o) { return *this = *this - o; }

  bool operator==(const Weight& o) const {
    if (exact_ && o.exact_) return *exact_ == *o.exact_;
    return value_ == o.value_;
  }
  bool operator!=(const Weight& o) const { return !(*this == o); }
  bool operator<(const Weight& o) const {
    if (exact_ && o.exact_) return *exact_ < *o.exact_;
    return value_ < o.value_;
  }
  bool operator<=(const Weight& o) const { return *this < o || *this == o; }
  bool operator>(const Weight& o) const { return o < *this; }
  bool operator>=(const Weight& o) const { return o <= *this; }

  // floor(n * this); requires a nonnegative value.
  std::int64_t floor_scaled(std::int64_t n) const {
    if (negative()) throw MassError("floor_scaled on negative weight");
    if (exact_) {
      Rational r = *exact_ * n;
      BigInt q = numerator(r) / denominator(r);  // exact floor for nonneg
      return q.convert_to<std::int64_t>();
    }
    return static_cast<std::int64_t>(std::floor(value_ * static_cast<double>(n)));
  }

  std::string to_string() const {
    if (exact_) {
      return numerator(*exact_).str() + "/" + denominator(*exact_).str();
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value_);
    return buf;
  }

private:
  std::optional<Rational> exact_;
  double value_ = 0.0;
};

inline Weight operator*(std::int64_t n, const Weight& w) {
  return Weight::integer(n) * w;
}

}  // namespace udseq
