#include <gtest/gtest.h>

#include <Eigen/LU>
#include <cmath>
#include <random>

#include "fastocc/gp_kernel.hpp"

using namespace fastocc;

namespace {

SupportPoints points2d(std::initializer_list<std::pair<double, double>> xy) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(xy.size()), 2);
  Eigen::Index i = 0;
  for (const auto& [x, y] : xy) {
    c(i, 0) = x;
    c(i, 1) = y;
    ++i;
  }
  return SupportPoints(c);
}

}  // namespace

TEST(BuildCovariance, SinglePoint) {
  const Covariance k = build_covariance({1.0, 0.5}, SupportPoints::from_1d({3.0}));
  ASSERT_EQ(k.matrix.rows(), 1);
  EXPECT_DOUBLE_EQ(k.matrix(0, 0), 0.25 + k.jitter);
  EXPECT_DOUBLE_EQ(k.jitter, 1e-6 * 0.25);
}

TEST(BuildCovariance, UnitDistanceOffDiagonal) {
  const Covariance k = build_covariance({1.0, 1.0}, SupportPoints::from_1d({0.0, 1.0}));
  EXPECT_DOUBLE_EQ(k.matrix(0, 1), std::exp(-1.0));
  EXPECT_DOUBLE_EQ(k.matrix(1, 0), std::exp(-1.0));
  EXPECT_DOUBLE_EQ(k.matrix(0, 0), 1.0 + k.jitter);
}

TEST(BuildCovariance, NoFactorTwoInExponent) {
  const Covariance k = build_covariance({2.0, 1.5}, SupportPoints::from_1d({0.0, 3.0}));
  EXPECT_DOUBLE_EQ(k.matrix(0, 1), 2.25 * std::exp(-9.0 / 4.0));
}

TEST(BuildCovariance, DistantPointsDecouple) {
  const Covariance k = build_covariance({1.0, 2.0}, SupportPoints::from_1d({0.0, 100.0}));
  EXPECT_LT(k.matrix(0, 1), 1e-30);
  EXPECT_NEAR(k.matrix(0, 0), 4.0, 1e-5);
}

TEST(BuildCovariance, TranslationInvariant) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  Eigen::MatrixXd c(30, 2);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = u(rng);
  Eigen::MatrixXd shifted = c;
  shifted.col(0).array() += 123.0;
  shifted.col(1).array() -= 45.0;
  const auto a = kernel_matrix({3.0, 1.2}, SupportPoints(c));
  const auto b = kernel_matrix({3.0, 1.2}, SupportPoints(shifted));
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildCovariance, JitterEscalatesOnDuplicates) {
  // many identical points make the bare kernel singular; the nugget rescues it
  const Covariance k = build_covariance({1.0, 1.0}, SupportPoints::from_1d(std::vector<double>(50, 2.0)));
  EXPECT_EQ(k.llt.info(), Eigen::Success);
  EXPECT_GE(k.jitter, 1e-6);
  EXPECT_LE(k.jitter, 1e-2);
}

TEST(BuildCovariance, Errors) {
  EXPECT_THROW(build_covariance({1.0, 1.0}, SupportPoints::from_1d({0.0, NAN})), Error);
  EXPECT_THROW(build_covariance({1.0, 1.0}, SupportPoints()), Error);
  EXPECT_THROW(build_covariance({0.0, 1.0}, SupportPoints::from_1d({0.0})), Error);
  try {
    build_covariance({1.0, 1.0}, SupportPoints::from_1d({0.0, INFINITY}));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(BuildCovariance, QuadAndLogDet) {
  const Covariance k = build_covariance({1.5, 0.7}, SupportPoints::from_1d({0.0, 1.0, 2.5, 4.0}));
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  EXPECT_NEAR(k.quad_inverse(x), x.dot(k.matrix.inverse() * x), 1e-9);
  EXPECT_NEAR(k.log_det(), std::log(k.matrix.determinant()), 1e-9);
  EXPECT_LT((k.inverse() * k.matrix - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SodGrid, SingleCell) {
  const SodGrid g = build_sod_grid(points2d({{1, 1}, {5, 2}, {10, 10}, {19, 3}}), 20.0);
  EXPECT_EQ(g.num_centers(), 1);
  for (int a : g.assignment) EXPECT_EQ(a, 0);
}

TEST(SodGrid, SeparatedSites) {
  const SodGrid g = build_sod_grid(points2d({{0, 0}, {25, 0}}), 20.0);
  EXPECT_EQ(g.num_centers(), 2);
  EXPECT_NE(g.assignment[0], g.assignment[1]);
}

TEST(SodGrid, BoundaryGoesToHigherSquare) {
  const SodGrid g = build_sod_grid(points2d({{0, 0}, {20, 0}}), 20.0);
  EXPECT_EQ(g.num_centers(), 2);
  EXPECT_EQ(g.cells[static_cast<std::size_t>(g.assignment[1])].first, 1);
}

TEST(SodGrid, RandomSitesWithinSquares) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  Eigen::MatrixXd c(10000, 2);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = u(rng);
  const SupportPoints sites(c);
  const SodGrid g = build_sod_grid(sites, 20.0);
  EXPECT_LE(g.num_centers(), 25);
  std::vector<int> hits(static_cast<std::size_t>(g.num_centers()), 0);
  for (Eigen::Index s = 0; s < sites.size(); ++s) {
    const int m = g.assignment[static_cast<std::size_t>(s)];
    ++hits[static_cast<std::size_t>(m)];
    const double dx = std::abs(sites.coords(s, 0) - g.centers.coords(m, 0));
    const double dy = std::abs(sites.coords(s, 1) - g.centers.coords(m, 1));
    EXPECT_LE(std::max(dx, dy), 10.0 + 1e-12);
    // brute force: no other centre is strictly closer in max-norm by more than rounding
    for (int o = 0; o < g.num_centers(); ++o) {
      const double ox = std::abs(sites.coords(s, 0) - g.centers.coords(o, 0));
      const double oy = std::abs(sites.coords(s, 1) - g.centers.coords(o, 1));
      EXPECT_GE(std::max(ox, oy) + 1e-12, std::max(dx, dy));
    }
  }
  for (int h : hits) EXPECT_GE(h, 1);
}

TEST(SodGrid, SmallStepSeparatesDistinctSites) {
  const SupportPoints sites = points2d({{0, 0}, {0.3, 0.1}, {0.3, 0.1}, {7, 2}});
  const SodGrid g = build_sod_grid(sites, 1e-3);
  EXPECT_EQ(g.num_centers(), 3);
  for (Eigen::Index s = 0; s < sites.size(); ++s) {
    const int m = g.assignment[static_cast<std::size_t>(s)];
    EXPECT_LE((sites.coords.row(s) - g.centers.coords.row(m)).norm(), 1e-3);
  }
}

TEST(SodGrid, RejectsBadStep) {
  EXPECT_THROW(build_sod_grid(points2d({{0, 0}}), 0.0), Error);
  EXPECT_THROW(build_sod_grid(points2d({{0, 0}}), -1.0), Error);
}

TEST(RwCovariance, ClosedForms) {
  const double s1 = 0.7, sb = 0.3;
  const Eigen::MatrixXd m = rw_covariance(s1, sb, 4);
  EXPECT_DOUBLE_EQ(m(2, 2), s1 * s1 + 2 * sb * sb);
  EXPECT_DOUBLE_EQ(m(0, 3), s1 * s1);
  for (int s = 0; s < 4; ++s) {
    for (int t = 0; t < 4; ++t) EXPECT_DOUBLE_EQ(m(s, t), s1 * s1 + std::min(s, t) * sb * sb);
  }
  const Eigen::MatrixXd flat = rw_covariance(1.3, 0.0, 5);
  EXPECT_TRUE((flat.array() == 1.3 * 1.3).all());
}

TEST(PriorComparison, GpStationaryRwNot) {
  const PriorComparison r = prior_comparison_report({2.0, 0.8}, 1.0, 1.0, 5);
  EXPECT_TRUE(r.gp.stationary);
  for (double v : r.gp.variance) EXPECT_NEAR(v, 0.64 * (1 + 1e-6), 1e-15);
  for (double c : r.gp.lag1_corr) EXPECT_NEAR(c, r.gp.lag1_corr.front(), 1e-14);
  EXPECT_FALSE(r.rw.stationary);

  const PriorComparison r4 = prior_comparison_report({1.0, 1.0}, 1.0, 1.0, 4);
  EXPECT_EQ(r4.rw.variance, (std::vector<double>{1, 2, 3, 4}));
  // numeric correlations from the matrix: Cov / sqrt(Var Var)
  const Eigen::MatrixXd m = rw_covariance(1.0, 1.0, 4);
  for (int t = 0; t < 3; ++t) {
    EXPECT_DOUBLE_EQ(r4.rw.lag1_corr[static_cast<std::size_t>(t)], m(t, t + 1) / std::sqrt(m(t, t) * m(t + 1, t + 1)));
  }
  for (std::size_t t = 1; t < r4.rw.lag1_corr.size(); ++t) EXPECT_GT(r4.rw.lag1_corr[t], r4.rw.lag1_corr[t - 1]);
  EXPECT_THROW(prior_comparison_report({1.0, 1.0}, 1.0, 1.0, 2), Error);
}
