#ifndef FASTOCC_PG_HPP
#define FASTOCC_PG_HPP

// Polya-Gamma PG(d, c) variates for integer d.
//
// PG(1, c) is drawn exactly with the alternating-series accept/reject scheme
// for the tilted Jacobi distribution J*(1, c/2), using PG(1, c) = J*(1, c/2) / 4.
// The proposal mixes a truncated exponential (right of the cut point) and a
// truncated inverse Gaussian (left of it); acceptance is decided by evaluating
// partial sums of the density series until the uniform falls outside the
// alternating bounds. PG(d, c) is the sum of d independent PG(1, c) draws.

#include <cmath>
#include <numbers>
#include <string>

#include "fastocc/error.hpp"
#include "fastocc/rng.hpp"

namespace fastocc {

struct PgParams {
  int d = 1;
  double c = 0.0;
};

namespace pg_detail {

// Cut point between the two proposal pieces.
inline constexpr double kCut = 0.64;
inline constexpr int kMaxProposals = 10000;

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// n-th coefficient of the J*(1) density series evaluated at x.
inline double series_term(int n, double x) {
  using std::numbers::pi;
  const double k = n + 0.5;
  if (x <= kCut) {
    return pi * k * std::exp(1.5 * std::log(2.0 / (pi * x)) - 2.0 * k * k / x);
  }
  return pi * k * std::exp(-0.5 * k * k * pi * pi * x);
}

// P(X < t) for X ~ InverseGaussian(1/z, 1); z = 0 is the Levy limit.
inline double inverse_gaussian_cdf(double t, double z) {
  const double root = 1.0 / std::sqrt(t);
  if (z == 0.0) return std::erfc(root / std::numbers::sqrt2);
  const double lhs = normal_cdf(root * (t * z - 1.0));
  const double rhs = std::exp(2.0 * z + std::log(normal_cdf(-root * (t * z + 1.0))));
  return lhs + rhs;
}

// InverseGaussian(mu, 1) truncated to (0, t).
inline double truncated_inverse_gaussian(double z, double t, Rng& rng) {
  const double mu = (z == 0.0) ? INFINITY : 1.0 / z;
  if (mu > t) {
    // 1/X is a truncated chi-square(1); tilt by exp(-z^2 X / 2).
    for (int attempt = 0; attempt < kMaxProposals; ++attempt) {
      double e1 = exponential1(rng);
      double e2 = exponential1(rng);
      while (e1 * e1 > 2.0 * e2 / t) {
        e1 = exponential1(rng);
        e2 = exponential1(rng);
      }
      const double x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      if (uniform01(rng) <= std::exp(-0.5 * z * z * x)) return x;
    }
  } else {
    for (int attempt = 0; attempt < kMaxProposals; ++attempt) {
      const double n = std_normal(rng);
      const double y = n * n;
      double x = mu + 0.5 * mu * mu * y - 0.5 * mu * std::sqrt(4.0 * mu * y + mu * mu * y * y);
      if (uniform01(rng) > mu / (mu + x)) x = mu * mu / x;
      if (x < t) return x;
    }
  }
  throw Error(ErrorKind::Numerical, "pg: truncated inverse Gaussian proposal exhausted");
}

// One draw from J*(1, z), z >= 0.
inline double draw_jstar1(double z, Rng& rng) {
  using std::numbers::pi;
  const double t = kCut;
  const double rate = 0.125 * pi * pi + 0.5 * z * z;
  const double p = (0.5 * pi / rate) * std::exp(-rate * t);
  const double q = 2.0 * std::exp(-z) * inverse_gaussian_cdf(t, z);
  const double right_prob = p / (p + q);

  for (int attempt = 0; attempt < kMaxProposals; ++attempt) {
    double x;
    if (uniform01(rng) < right_prob) {
      x = t + exponential1(rng) / rate;
    } else {
      x = truncated_inverse_gaussian(z, t, rng);
    }
    double s = series_term(0, x);
    const double y = uniform01(rng) * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_term(n, x);
        if (y <= s) return x;
      } else {
        s += series_term(n, x);
        if (y > s) break;
      }
    }
  }
  throw Error(ErrorKind::Numerical,
              "pg: accept/reject exceeded " + std::to_string(kMaxProposals) + " proposals");
}

}  // namespace pg_detail

inline double draw_pg1(double c, Rng& rng) {
  return 0.25 * pg_detail::draw_jstar1(0.5 * std::abs(c), rng);
}

inline double draw_pg(const PgParams& params, Rng& rng) {
  if (params.d < 1) {
    throw Error(ErrorKind::InvalidParameter,
                "pg: shape d must be a positive integer, got " + std::to_string(params.d));
  }
  double sum = 0.0;
  for (int i = 0; i < params.d; ++i) sum += draw_pg1(params.c, rng);
  return sum;
}

// E[PG(d, c)] = d / (2c) * tanh(c / 2), with the continuous limit d / 4 at c = 0.
inline double pg_mean(const PgParams& params) {
  const double c = std::abs(params.c);
  if (c < 1e-4) {
    // tanh(x)/x = 1 - x^2/3 + 2x^4/15
    const double x2 = 0.25 * c * c;
    return 0.25 * params.d * (1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0);
  }
  return params.d / (2.0 * c) * std::tanh(0.5 * c);
}

// Var[PG(d, c)] = d (sinh c - c) / (4 c^3 cosh^2(c/2)), d / 24 at c = 0.
inline double pg_variance(const PgParams& params) {
  const double c = std::abs(params.c);
  if (c < 1e-3) return params.d * (1.0 / 24.0 - c * c / 120.0);
  const double ch = std::cosh(0.5 * c);
  return params.d * (std::sinh(c) - c) / (4.0 * c * c * c * ch * ch);
}

}  // namespace fastocc

#endif  // FASTOCC_PG_HPP
