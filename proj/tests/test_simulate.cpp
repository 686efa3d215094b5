#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fastocc/simulate.hpp"

using namespace fastocc;

namespace {

SimConfig flat(int S, int Y) {
  SimConfig c;
  c.S = S;
  c.Y = Y;
  c.mu_psi = 0.0;
  c.sigma_t = 0.0;
  c.sigma_s = 0.0;
  c.sigma_eps = 0.0;
  c.u = 0.0;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(Generate, ZeroEffectsGiveOneHalf) {
  const Simulation sim = generate(flat(50, 4));
  EXPECT_TRUE((sim.truth.psi.array() == 0.5).all());
  EXPECT_TRUE((sim.truth.index.array() == 0.5).all());
}

TEST(Generate, VisitVolumeAndDetectionRate) {
  SimConfig c = flat(3000, 5);
  c.mu_psi = std::log(0.6 / 0.4);
  c.u = std::log(0.3 / 0.7);
  const Simulation sim = generate(c);
  // Poisson(2) visits per unit
  const double n = static_cast<double>(sim.records.size());
  const double expect = c.S * c.Y * 2.0;
  EXPECT_NEAR(n, expect, 5.0 * std::sqrt(expect));
  double det = 0.0;
  for (const auto& r : sim.records) det += r.detected;
  EXPECT_NEAR(det / n, 0.6 * 0.3, 0.015);
}

TEST(Generate, RecordsAreWellFormed) {
  SimConfig c = preset("supp-2.1-s500");
  c.S = 200;
  c.seed = 11;
  const Simulation sim = generate(c);
  std::set<std::tuple<std::string, int, int>> seen;
  for (const auto& r : sim.records) {
    EXPECT_GE(r.julian_day, 1);
    EXPECT_LE(r.julian_day, 365);
    EXPECT_GE(r.list_length, 1);
    EXPECT_LE(r.list_length, c.max_list_length);
    EXPECT_GE(r.easting, 0.0);
    EXPECT_LE(r.easting, c.extent);
    EXPECT_TRUE(seen.insert({r.site_id, r.year, r.julian_day}).second);
  }
  EXPECT_EQ(sim.truth.years.front(), 2001);
  EXPECT_EQ(sim.truth.years.back(), 2015);
}

TEST(Generate, DeterministicPerSeed) {
  SimConfig c = preset("supp-2.1-s500");
  c.S = 100;
  const Simulation a = generate(c);
  const Simulation b = generate(c);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].julian_day, b.records[i].julian_day);
    EXPECT_EQ(a.records[i].detected, b.records[i].detected);
  }
  EXPECT_EQ(a.truth.psi, b.truth.psi);
  c.seed = 2;
  EXPECT_NE(generate(c).truth.psi, a.truth.psi);
}

TEST(Generate, DetectionTrend) {
  SimConfig c = flat(10, 5);
  c.has_u_trend = true;
  c.u_start = -2.0;
  c.u_end = 0.0;
  const Simulation sim = generate(c);
  EXPECT_DOUBLE_EQ(sim.truth.u(0), -2.0);
  EXPECT_DOUBLE_EQ(sim.truth.u(2), -1.0);
  EXPECT_DOUBLE_EQ(sim.truth.u(4), 0.0);
}

TEST(Presets, Values) {
  EXPECT_EQ(preset_names().size(), 5u);
  for (int s : {500, 1000, 2500, 5000}) {
    const SimConfig c = preset("supp-2.1-s" + std::to_string(s));
    EXPECT_EQ(c.S, s);
    EXPECT_EQ(c.Y, 15);
    EXPECT_EQ(c.visit_mean, 2.0);
    EXPECT_EQ(c.mu_psi, -1.0);
    EXPECT_EQ(c.u, -1.0);
    EXPECT_EQ(c.sigma_t, 0.2);
    EXPECT_EQ(c.l_t, 1.0);
    EXPECT_EQ(c.sigma_s, 0.0);
  }
  const SimConfig big = preset("supp-2.2");
  EXPECT_EQ(big.S, 10000);
  EXPECT_EQ(big.Y, 40);
  EXPECT_EQ(big.visits, VisitModel::OnePlusPoisson);
  EXPECT_EQ(big.visit_mean, 0.5);
  EXPECT_EQ(big.visit_prob, 0.05);
  EXPECT_EQ(big.sigma_s, 0.5);
  EXPECT_EQ(big.l_s, 0.25);
  EXPECT_THROW(preset("supp-2.1-s600"), Error);
  EXPECT_THROW(preset("nope"), Error);
}

TEST(Generate, RejectsBadConfig) {
  SimConfig c = flat(10, 2);
  c.visit_prob = 1.5;
  EXPECT_THROW(generate(c), Error);
  c = flat(10, 2);
  c.sigma_t = -1.0;
  EXPECT_THROW(generate(c), Error);
  c = flat(0, 2);
  EXPECT_THROW(generate(c), Error);
}

TEST(ScoreRecovery, ChainAtTheTruthCoversEverything) {
  SimConfig c = preset("supp-2.1-s500");
  c.S = 60;
  c.Y = 5;
  c.seed = 21;
  const Simulation sim = generate(c);
  const Dataset ds = build_dataset(sim.records, DataOptions{});

  ChainOutput chain;
  chain.years = ds.years;
  chain.site_cell.assign(static_cast<std::size_t>(ds.num_sites()), 0);
  const int S = ds.num_sites(), Y = ds.num_years();
  chain.scalars = Eigen::MatrixXd::Constant(2, 8, c.mu_psi);
  chain.b.resize(2, Y);
  chain.eps.resize(2, S);
  chain.index.resize(2, Y);
  chain.beta_psi = Eigen::MatrixXd::Zero(2, ds.occupancy_x.cols());
  chain.a_tilde.resize(2, 0);
  for (int d = 0; d < 2; ++d) {
    const double delta = d == 0 ? -1e-6 : 1e-6;
    for (int t = 0; t < Y; ++t) chain.b(d, t) = sim.truth.b(t) + delta;
    for (int s = 0; s < S; ++s) {
      const int ts = std::stoi(ds.site_ids[static_cast<std::size_t>(s)].substr(1)) - 1;
      chain.eps(d, s) = sim.truth.eps(ts);
    }
  }
  // the index from the same draws
  const OccupancySurface surface(ds, chain.site_cell);
  for (int t = 0; t < Y; ++t) {
    const Eigen::MatrixXd psi = surface.psi_draws(chain, t);
    for (int d = 0; d < 2; ++d) chain.index(d, t) = psi.row(d).mean();
  }
  const RecoveryReport r = score_recovery(chain, ds, sim.truth, 0);
  EXPECT_EQ(r.index_covered, Y);
  EXPECT_EQ(r.psi_covered, S);
  EXPECT_NEAR(r.spatial_rmse, 0.0, 1e-12);

  chain.b.array() += 1.0;
  const RecoveryReport off = score_recovery(chain, ds, sim.truth, 0);
  EXPECT_EQ(off.psi_covered, 0);
  EXPECT_THROW(score_recovery(chain, ds, sim.truth, Y), Error);
}
