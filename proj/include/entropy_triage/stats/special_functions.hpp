#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "entropy_triage/error.hpp"

// Regularized incomplete beta and gamma functions, and the distribution tails
// built on them. Continued fractions use the modified Lentz method.

namespace entropy_triage::stats {

namespace detail {

inline constexpr double kEps = 1e-16;
inline constexpr double kTiny = 1e-300;
inline constexpr int kMaxIter = 100000;

/// Continued fraction for I_x(a, b); converges fast for x < (a+1)/(a+b+2).
inline double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw DomainError("incomplete beta continued fraction did not converge");
}

inline double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw DomainError("incomplete gamma series did not converge");
}

inline double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) {
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    }
  }
  throw DomainError("incomplete gamma continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete_beta requires a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete_beta requires x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw DomainError("gamma_p requires a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_series(a, x);
  return 1.0 - detail::gamma_continued_fraction(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// directly in the tail so tiny p-values keep their relative precision.
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw DomainError("gamma_q requires a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_series(a, x);
  return detail::gamma_continued_fraction(a, x);
}

inline double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

/// Two-sided tail of Student's t with `df` degrees of freedom.
inline double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw DomainError("t distribution requires df > 0");
  if (std::isinf(t)) return 0.0;
  return clamp_probability(incomplete_beta(0.5 * df, 0.5, df / (df + t * t)));
}

/// Upper tail P(F > f) of the F distribution.
inline double f_upper_tail(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw DomainError("F distribution requires df > 0");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return clamp_probability(incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f)));
}

inline double chi_squared_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  return clamp_probability(gamma_p(0.5 * df, 0.5 * x));
}

inline double chi_squared_upper_tail(double x, double df) {
  if (x <= 0.0) return 1.0;
  return clamp_probability(gamma_q(0.5 * df, 0.5 * x));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_two_sided(double z) {
  return clamp_probability(std::erfc(std::fabs(z) / std::sqrt(2.0)));
}

}  // namespace entropy_triage::stats
