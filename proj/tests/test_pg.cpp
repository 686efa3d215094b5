#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fastocc/pg.hpp"

using namespace fastocc;

namespace {

// PG(1, c) = 1/(2 pi^2) sum_k g_k / ((k - 1/2)^2 + c^2 / (4 pi^2)), g_k ~ Exp(1);
// mean and variance follow term by term.
double series_mean(double c, long terms = 2000000) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double a = c * c / (4.0 * pi2);
  double s = 0.0;
  for (long k = terms; k >= 1; --k) s += 1.0 / ((k - 0.5) * (k - 0.5) + a);
  // tail of 1/k^2 beyond the last term
  s += 1.0 / (terms + 0.0);
  return s / (2.0 * pi2);
}

double series_variance(double c, long terms = 200000) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double a = c * c / (4.0 * pi2);
  double s = 0.0;
  for (long k = terms; k >= 1; --k) {
    const double d = (k - 0.5) * (k - 0.5) + a;
    s += 1.0 / (d * d);
  }
  return s / (4.0 * pi2 * pi2);
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= x.size();
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= (x.size() - 1);
  return m;
}

std::vector<double> draws(int d, double c, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = draw_pg({d, c}, rng);
  return out;
}

// two-sample Kolmogorov-Smirnov statistic
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST(PgMean, LimitAndLinearity) {
  EXPECT_DOUBLE_EQ(pg_mean({1, 0.0}), 0.25);
  EXPECT_DOUBLE_EQ(pg_mean({4, 0.0}), 1.0);
  EXPECT_NEAR(pg_mean({1, 1e-6}), 0.25, 1e-12);
}

TEST(PgMean, MatchesSeries) {
  EXPECT_NEAR(pg_mean({1, 2.0}), 0.25 * std::tanh(1.0), 1e-15);
  for (double c : {0.0, 0.5, 1.0, 2.0, 5.0}) EXPECT_NEAR(pg_mean({1, c}), series_mean(c), 1e-9) << c;
}

TEST(PgVariance, MatchesSeries) {
  for (double c : {0.0, 1e-4, 0.5, 1.0, 2.0, 5.0}) {
    EXPECT_NEAR(pg_variance({1, c}), series_variance(c), 1e-9) << c;
  }
  EXPECT_NEAR(pg_variance({3, 1.0}), 3.0 * pg_variance({1, 1.0}), 1e-15);
}

TEST(PgDraw, MomentsWithinFourStandardErrors) {
  const int n = 100000;
  std::uint64_t seed = 11;
  for (int d : {1, 2, 5}) {
    for (double c : {0.0, 0.5, 1.0, 2.0, 5.0}) {
      const auto x = draws(d, c, n, seed++);
      const Moments m = moments(x);
      const double se = std::sqrt(pg_variance({d, c}) / n);
      EXPECT_LT(std::abs(m.mean - pg_mean({d, c})), 4.0 * se) << "d=" << d << " c=" << c;
    }
  }
}

TEST(PgDraw, VarianceMatches) {
  const int n = 100000;
  for (double c : {0.0, 2.0}) {
    const auto x = draws(1, c, n, 5);
    const double v = pg_variance({1, c});
    // sd of the sample variance is below v * sqrt(10 / n) for these laws
    EXPECT_NEAR(moments(x).var, v, 4.0 * v * std::sqrt(10.0 / n)) << c;
  }
}

TEST(PgDraw, AdditivityOfComponents) {
  const int n = 100000;
  Rng a(3);
  std::vector<double> summed(n);
  for (auto& v : summed) v = draw_pg1(1.0, a) + draw_pg1(1.0, a) + draw_pg1(1.0, a);
  const auto direct = draws(3, 1.0, n, 4);
  const Moments ms = moments(summed);
  const Moments md = moments(direct);
  const double se = std::sqrt(ms.var / n + md.var / n);
  EXPECT_LT(std::abs(ms.mean - md.mean), 4.0 * se);
  EXPECT_LT(ks_statistic(summed, direct), 1.628 * std::sqrt(2.0 / n));
}

TEST(PgDraw, SymmetricInC) {
  const int n = 100000;
  const auto pos = draws(1, 2.0, n, 21);
  const auto neg = draws(1, -2.0, n, 22);
  // asymptotic two-sample critical value at alpha = 0.01
  EXPECT_LT(ks_statistic(pos, neg), 1.628 * std::sqrt(2.0 / n));
}

TEST(PgDraw, PositiveFiniteAndDeterministic) {
  for (double c : {0.0, 0.01, 1.0, 10.0, 50.0, 300.0}) {
    const auto x = draws(1, c, 2000, 9);
    for (double v : x) {
      EXPECT_GT(v, 0.0);
      EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_EQ(x, draws(1, c, 2000, 9));
  }
}

TEST(PgDraw, RejectsNonPositiveShape) {
  Rng rng(1);
  EXPECT_THROW(draw_pg({0, 1.0}, rng), Error);
  try {
    draw_pg({-2, 1.0}, rng);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidParameter);
  }
}
