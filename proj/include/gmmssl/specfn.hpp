// Standard normal special functions: density, cdf, upper tail and quantile.
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gmmssl {

/// A value known to lie in [0, 1].
class Probability {
 public:
  constexpr Probability() = default;
  constexpr explicit Probability(double v) : value_(v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::domain_error("probability out of [0,1]: " + std::to_string(v));
    }
  }
  constexpr double value() const { return value_; }
  constexpr operator double() const { return value_; }

 private:
  double value_ = 0.0;
};

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934381868;
inline constexpr double kInvSqrt2 = 0.707106781186547524400844362104849039;

inline double std_normal_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Both tails go through erfc so neither side loses digits to 1 - small.
inline Probability std_normal_cdf(double x) {
  if (std::isnan(x)) throw std::domain_error("std_normal_cdf: NaN argument");
  return Probability(0.5 * std::erfc(-x * kInvSqrt2));
}

/// Q(x) = 1 - Phi(x), evaluated directly on the upper tail.
inline Probability q_function(double x) {
  if (std::isnan(x)) throw std::domain_error("q_function: NaN argument");
  return Probability(0.5 * std::erfc(x * kInvSqrt2));
}

namespace detail {

// Rational starting point (Acklam); relative error about 1e-9 before refinement.
inline double quantile_initial_guess(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Lower-half quantile (p <= 0.5): Halley steps on the implemented cdf, kept
// inside a bisection bracket.
inline double lower_quantile(double p) {
  double x = quantile_initial_guess(p);
  double lo = -40.0;
  double hi = 0.0;
  for (int iter = 0; iter < 60; ++iter) {
    const double err = std_normal_cdf(x) - p;
    if (err > 0) hi = std::min(hi, x); else lo = std::max(lo, x);
    if (err == 0.0) return x;
    const double u = err / std_normal_pdf(x);
    double next = x - u / (1.0 + 0.5 * x * u);
    if (std::abs(next - x) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
      return next;
    }
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

}  // namespace detail

/// Inverse of std_normal_cdf on the open interval (0, 1).
inline double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("std_normal_quantile: p must lie in (0,1), got " +
                            std::to_string(p));
  }
  if (p == 0.5) return 0.0;
  if (p < 0.5) return detail::lower_quantile(p);
  return -detail::lower_quantile(1.0 - p);
}

}  // namespace gmmssl
