#pragma once

#include <cmath>

namespace gbwm {

// Numerically stable softplus and its derivative.
inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  double z = std::exp(x);
  return z / (1.0 + z);
}

inline double normal_pdf_std(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

inline double normal_cdf_std(double z) {
  static const double inv_sqrt_2 = 0.7071067811865476;
  return 0.5 * std::erfc(-z * inv_sqrt_2);
}

// Digamma via upward recurrence into the asymptotic regime.
double digamma(double x);

// Trigamma (derivative of digamma), same scheme.
double trigamma(double x);

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace gbwm
