#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fastocc/design.hpp"

using namespace fastocc;

namespace {

struct Fixture {
  Eigen::MatrixXd dense;
  std::vector<int> year;
  std::vector<int> cell;
  Eigen::VectorXd omega;
  Eigen::VectorXd k;
  DesignView view;
};

// filled in place: the view points into the fixture's own storage
void random_fixture(Fixture& f, std::mt19937_64& rng, int J, int Y, int M, int p) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.01, 2.0);
  f.dense.resize(J, p);
  for (Eigen::Index i = 0; i < f.dense.size(); ++i) f.dense(i) = z(rng);
  std::uniform_int_distribution<int> yd(0, Y - 1), md(0, M - 1);
  for (int j = 0; j < J; ++j) {
    f.year.push_back(yd(rng));
    f.cell.push_back(md(rng));
  }
  f.omega.resize(J);
  f.k.resize(J);
  for (int j = 0; j < J; ++j) {
    f.omega(j) = w(rng);
    f.k(j) = z(rng);
  }
  f.view.intercept = true;
  f.view.dense = &f.dense;
  f.view.rows = J;
  f.view.factors = {{f.year, Y}, {f.cell, M}};
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(SparseCrossProducts, MatchesDenseOracle) {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 20; ++rep) {
    const int J = std::uniform_int_distribution<int>(20, 500)(rng);
    const int Y = std::uniform_int_distribution<int>(1, 10)(rng);
    const int M = std::uniform_int_distribution<int>(1, 8)(rng);
    const int p = std::uniform_int_distribution<int>(0, 3)(rng);
    Fixture f;
    random_fixture(f, rng, J, Y, M, p);
    const CrossProducts cp = sparse_cross_products(f.view, {f.omega.data(), static_cast<std::size_t>(J)},
                                                   {f.k.data(), static_cast<std::size_t>(J)});
    const Eigen::MatrixXd x = dense_design(f.view);
    const Eigen::MatrixXd xtwx = x.transpose() * f.omega.asDiagonal() * x;
    const Eigen::VectorXd xtk = x.transpose() * f.k;
    EXPECT_LT(rel_err(cp.xtwx(f.view), xtwx), 1e-10) << rep;
    EXPECT_LT(rel_err(cp.xtk(f.view), xtk), 1e-10) << rep;
  }
}

TEST(SparseCrossProducts, CountingWithUnitWeights) {
  const int J = 37;
  std::vector<int> zeros(J, 0);
  Eigen::MatrixXd none(J, 0);
  DesignView d;
  d.dense = &none;
  d.rows = J;
  d.factors = {{zeros, 1}, {zeros, 1}};
  std::vector<double> one(J, 1.0);
  const CrossProducts cp = sparse_cross_products(d, one, one);
  EXPECT_DOUBLE_EQ(cp.factor_diag[0](0), J);
  EXPECT_DOUBLE_EQ(cp.factor_pair[0](0, 0), J);
  EXPECT_DOUBLE_EQ(cp.int_int, J);
}

TEST(SparseCrossProducts, PermutationInvariant) {
  std::mt19937_64 rng(5);
  Fixture f;
  random_fixture(f, rng, 300, 6, 5, 2);
  std::vector<int> perm(300);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto a = sparse_cross_products(f.view, std::vector<int>(perm.begin(), perm.end()),
                                       {f.omega.data(), 300}, {f.k.data(), 300});
  const auto b = sparse_cross_products(f.view, {f.omega.data(), 300}, {f.k.data(), 300});
  EXPECT_LT(rel_err(a.xtwx(f.view), b.xtwx(f.view)), 1e-12);
  EXPECT_LT(rel_err(a.xtk(f.view), b.xtk(f.view)), 1e-12);
}

TEST(SparseCrossProducts, RowSubsetEqualsZeroWeights) {
  std::mt19937_64 rng(6);
  Fixture f;
  random_fixture(f, rng, 200, 4, 3, 3);
  std::vector<int> rows;
  Eigen::VectorXd masked = Eigen::VectorXd::Zero(200);
  Eigen::VectorXd kmasked = Eigen::VectorXd::Zero(200);
  for (int i = 0; i < 200; i += 3) {
    rows.push_back(i);
    masked(i) = f.omega(i);
    kmasked(i) = f.k(i);
  }
  const auto a = sparse_cross_products(f.view, rows, {f.omega.data(), 200}, {f.k.data(), 200});
  const auto b = sparse_cross_products(f.view, {masked.data(), 200}, {kmasked.data(), 200});
  EXPECT_LT(rel_err(a.xtwx(f.view), b.xtwx(f.view)), 1e-12);
  EXPECT_LT(rel_err(a.xtk(f.view), b.xtk(f.view)), 1e-12);
}

TEST(SparseCrossProducts, ChunkedSumIndependentOfThreads) {
  std::mt19937_64 rng(7);
  Fixture f;
  random_fixture(f, rng, 3 * static_cast<int>(kAccumulateChunk) + 17, 9, 7, 3);
  const auto n = static_cast<std::size_t>(f.view.rows);
  const auto a = sparse_cross_products(f.view, {f.omega.data(), n}, {f.k.data(), n}, 1);
  const auto b = sparse_cross_products(f.view, {f.omega.data(), n}, {f.k.data(), n}, 4);
  EXPECT_EQ(a.xtwx(f.view), b.xtwx(f.view));
  EXPECT_EQ(a.xtk(f.view), b.xtk(f.view));
  const Eigen::MatrixXd x = dense_design(f.view);
  EXPECT_LT(rel_err(a.xtwx(f.view), x.transpose() * f.omega.asDiagonal() * x), 1e-10);
}

TEST(SparseCrossProducts, NoInterceptLayout) {
  std::mt19937_64 rng(8);
  Fixture f;
  random_fixture(f, rng, 100, 5, 2, 2);
  f.view.intercept = false;
  f.view.factors.pop_back();
  EXPECT_EQ(f.view.num_columns(), 7);
  const auto cp = sparse_cross_products(f.view, {f.omega.data(), 100}, {f.k.data(), 100});
  const Eigen::MatrixXd x = dense_design(f.view);
  EXPECT_LT(rel_err(cp.xtwx(f.view), x.transpose() * f.omega.asDiagonal() * x), 1e-10);
  EXPECT_LT(rel_err(cp.xtk(f.view), x.transpose() * f.k), 1e-10);
}
