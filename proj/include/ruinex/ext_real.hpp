#pragma once

#include <cmath>
#include <compare>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ruinex {

/// A real number or +infinity. Infinity is an explicit tag, never a float
/// sentinel: `finite()` rejects non-finite input.
class ExtReal {
 public:
  constexpr ExtReal() = default;

  static ExtReal finite(double x) {
    if (!std::isfinite(x)) {
      throw std::domain_error("ExtReal::finite: non-finite value");
    }
    return ExtReal(x, false);
  }
  static constexpr ExtReal infinity() { return ExtReal(0.0, true); }

  /// Maps +inf to the infinity tag; throws on NaN or -inf.
  static ExtReal from_double(double x) {
    if (x == std::numeric_limits<double>::infinity()) return infinity();
    return finite(x);
  }

  [[nodiscard]] constexpr bool is_finite() const { return !inf_; }
  [[nodiscard]] constexpr bool is_infinite() const { return inf_; }

  [[nodiscard]] double value() const {
    if (inf_) throw std::logic_error("ExtReal::value on infinity");
    return v_;
  }

  /// IEEE view for arithmetic at call sites that handle +inf themselves.
  [[nodiscard]] constexpr double to_double() const {
    return inf_ ? std::numeric_limits<double>::infinity() : v_;
  }

  friend constexpr bool operator==(const ExtReal& a, const ExtReal& b) {
    return a.inf_ == b.inf_ && (a.inf_ || a.v_ == b.v_);
  }
  friend constexpr std::partial_ordering operator<=>(const ExtReal& a,
                                                     const ExtReal& b) {
    if (a.inf_ && b.inf_) return std::partial_ordering::equivalent;
    if (a.inf_) return std::partial_ordering::greater;
    if (b.inf_) return std::partial_ordering::less;
    return a.v_ <=> b.v_;
  }

  friend ExtReal operator+(const ExtReal& a, const ExtReal& b) {
    if (a.inf_ || b.inf_) return infinity();
    return from_double(a.v_ + b.v_);
  }
  /// Division by a positive finite scalar.
  friend ExtReal operator/(const ExtReal& a, double d) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw std::domain_error("ExtReal: divisor must be positive and finite");
    }
    if (a.inf_) return infinity();
    return from_double(a.v_ / d);
  }
  /// Multiplication by a positive finite scalar.
  friend ExtReal operator*(const ExtReal& a, double m) {
    if (!(m > 0.0) || !std::isfinite(m)) {
      throw std::domain_error("ExtReal: factor must be positive and finite");
    }
    if (a.inf_) return infinity();
    return from_double(a.v_ * m);
  }

  [[nodiscard]] std::string to_string() const {
    if (inf_) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v_);
    return buf;
  }

  friend std::ostream& operator<<(std::ostream& os, const ExtReal& x) {
    return os << x.to_string();
  }

 private:
  constexpr ExtReal(double v, bool inf) : v_(v), inf_(inf) {}
  double v_ = 0.0;
  bool inf_ = false;
};

inline ExtReal min(const ExtReal& a, const ExtReal& b) { return b < a ? b : a; }
inline ExtReal max(const ExtReal& a, const ExtReal& b) { return a < b ? b : a; }

}  // namespace ruinex
