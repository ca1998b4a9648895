#pragma once

#include <cmath>

namespace qacal {

// 1 / (1 + exp(-z)), saturating cleanly at the ends.
inline double logistic(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  if (z > 35.0) return z;
  if (z < -35.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

// log(logistic(z)) and log(1 - logistic(z)).
inline double log_logistic(double z) { return -softplus(-z); }
inline double log_logistic_c(double z) { return -softplus(z); }

// logistic(x) - logistic(y) without cancellation when both saturate.
// Intended for x >= y; a non-positive gap falls back to direct subtraction
// (the result may then be <= 0 and callers clamp).
inline double logistic_diff(double x, double y) {
  double d = x - y;
  if (d <= 0.0) return logistic(x) - logistic(y);
  if (d > 36.0)
    return std::exp(log_logistic(y) + log_logistic(-x) + d + std::log1p(-std::exp(-d)));
  return logistic(y) * logistic(-x) * std::expm1(d);
}

inline double normal_pdf(double z) {
  return 0.3989422804014326779399460599344 * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Two-sided p-value for a t statistic with df degrees of freedom.
double t_two_sided_p(double t, double df);

// Two-sided p-value for a standard-normal (Wald) z statistic.
inline double z_two_sided_p(double z) { return std::erfc(std::fabs(z) * 0.70710678118654752440); }

}  // namespace qacal
