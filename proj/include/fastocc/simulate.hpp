#ifndef FASTOCC_SIMULATE_HPP
#define FASTOCC_SIMULATE_HPP

// Synthetic occupancy data with known generating values.
//
// Sites are uniform on a square of side `extent` km. Length scales are given
// in unit-square coordinates (l_S = 0.25 means a quarter of the side) and in
// years for the temporal effect.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "fastocc/data_model.hpp"
#include "fastocc/error.hpp"
#include "fastocc/gp_kernel.hpp"
#include "fastocc/posterior.hpp"
#include "fastocc/rng.hpp"
#include "fastocc/state.hpp"

namespace fastocc {

enum class VisitModel { Poisson, OnePlusPoisson };

struct SimConfig {
  std::string name = "custom";
  int S = 500;
  int Y = 15;
  int first_year = 2001;
  VisitModel visits = VisitModel::Poisson;
  double visit_mean = 2.0;
  double visit_prob = 1.0;  // chance that a site is visited in a given year
  double mu_psi = -1.0;
  double sigma_eps = 0.5;
  double u = -1.0;
  // linear detection trend from u_start (first year) to u_end (last year);
  // used instead of u when has_u_trend is set
  bool has_u_trend = false;
  double u_start = -1.0;
  double u_end = -1.0;
  double sigma_t = 0.2;
  double l_t = 1.0;
  double sigma_s = 0.0;
  double l_s = 0.25;
  double extent = 100.0;
  int max_list_length = 30;
  std::uint64_t seed = 1;
};

inline std::vector<std::string> preset_names() {
  return {"supp-2.1-s500", "supp-2.1-s1000", "supp-2.1-s2500", "supp-2.1-s5000", "supp-2.2"};
}

inline SimConfig preset(const std::string& name) {
  SimConfig c;
  c.name = name;
  if (name.rfind("supp-2.1-s", 0) == 0) {
    const std::string tail = name.substr(10);
    if (tail != "500" && tail != "1000" && tail != "2500" && tail != "5000") {
      throw Error(ErrorKind::Config, "unknown preset '" + name + "'");
    }
    c.S = std::stoi(tail);
    c.Y = 15;
    c.visits = VisitModel::Poisson;
    c.visit_mean = 2.0;
    c.visit_prob = 1.0;
    c.mu_psi = -1.0;
    c.sigma_eps = 0.5;
    c.u = -1.0;
    c.sigma_t = 0.2;
    c.l_t = 1.0;
    c.sigma_s = 0.0;
    return c;
  }
  if (name == "supp-2.2") {
    c.S = 10000;
    c.Y = 40;
    c.visits = VisitModel::OnePlusPoisson;
    c.visit_mean = 0.5;
    c.visit_prob = 0.05;
    c.mu_psi = 0.0;
    c.sigma_eps = 0.1;
    c.u = -1.0;
    c.sigma_t = 0.2;
    c.l_t = 1.0;
    c.sigma_s = 0.5;
    c.l_s = 0.25;
    return c;
  }
  throw Error(ErrorKind::Config, "unknown preset '" + name + "'");
}

struct Truth {
  SimConfig config;
  std::vector<std::string> site_ids;
  Eigen::MatrixXd coords;  // S x 2, km
  std::vector<int> years;
  Eigen::VectorXd b;    // Y
  Eigen::VectorXd u;    // Y
  Eigen::VectorXd a;    // S
  Eigen::VectorXd eps;  // S
  Eigen::MatrixXd psi;  // S x Y
  Eigen::VectorXd index;  // Y, mean of psi over all simulated sites
};

struct Simulation {
  std::vector<VisitRecord> records;
  Truth truth;
};

namespace sim_detail {

inline Eigen::VectorXd gp_draw(double sigma, double l, const SupportPoints& pts, Rng& rng) {
  const Eigen::Index n = pts.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (sigma <= 0.0) return out;
  const Covariance k = build_covariance({l, sigma}, pts);
  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi(i) = std_normal(rng);
  out = k.llt.matrixL() * xi;
  return out;
}

// n distinct days from 1..365 in increasing order.
inline std::vector<int> distinct_days(int n, Rng& rng) {
  std::vector<int> days;
  while (static_cast<int>(days.size()) < n) {
    const int d = 1 + static_cast<int>(std::uniform_int_distribution<int>(0, 364)(rng));
    if (std::find(days.begin(), days.end(), d) == days.end()) days.push_back(d);
  }
  std::sort(days.begin(), days.end());
  return days;
}

}  // namespace sim_detail

inline void check_config(const SimConfig& c) {
  if (c.S < 1 || c.Y < 1) throw Error(ErrorKind::InvalidParameter, "simulate: S and Y must be >= 1");
  if (!(c.visit_mean > 0.0)) throw Error(ErrorKind::InvalidParameter, "simulate: visit_mean must be > 0");
  if (c.visit_prob < 0.0 || c.visit_prob > 1.0) throw Error(ErrorKind::InvalidParameter, "simulate: visit_prob outside [0,1]");
  if (c.sigma_t < 0.0 || c.sigma_s < 0.0 || c.sigma_eps < 0.0) {
    throw Error(ErrorKind::InvalidParameter, "simulate: standard deviations must be >= 0");
  }
  if (!(c.l_t > 0.0) || !(c.l_s > 0.0) || !(c.extent > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "simulate: length scales and extent must be > 0");
  }
  if (c.max_list_length < 1) throw Error(ErrorKind::InvalidParameter, "simulate: max_list_length must be >= 1");
}

// Draws the truth and the visit records. The generating detection model has
// year intercepts only; list length and julian day carry no effect.
inline Simulation generate(const SimConfig& c) {
  check_config(c);
  Rng rng(c.seed);
  Simulation out;
  Truth& tr = out.truth;
  tr.config = c;

  Eigen::MatrixXd unit(c.S, 2);
  for (int s = 0; s < c.S; ++s) {
    unit(s, 0) = uniform01(rng);
    unit(s, 1) = uniform01(rng);
    tr.site_ids.push_back("s" + std::to_string(s + 1));
  }
  tr.coords = unit * c.extent;
  for (int t = 0; t < c.Y; ++t) tr.years.push_back(c.first_year + t);

  std::vector<double> w;
  for (int t = 0; t < c.Y; ++t) w.push_back(static_cast<double>(t));
  tr.b = sim_detail::gp_draw(c.sigma_t, c.l_t, SupportPoints::from_1d(w), rng);
  tr.a = sim_detail::gp_draw(c.sigma_s, c.l_s, SupportPoints{unit}, rng);
  tr.eps.resize(c.S);
  for (int s = 0; s < c.S; ++s) tr.eps(s) = c.sigma_eps * std_normal(rng);
  tr.u.resize(c.Y);
  for (int t = 0; t < c.Y; ++t) {
    const double f = c.Y > 1 ? static_cast<double>(t) / (c.Y - 1) : 0.0;
    tr.u(t) = c.has_u_trend ? c.u_start + f * (c.u_end - c.u_start) : c.u;
  }
  tr.psi.resize(c.S, c.Y);
  for (int s = 0; s < c.S; ++s) {
    for (int t = 0; t < c.Y; ++t) tr.psi(s, t) = logistic(c.mu_psi + tr.b(t) + tr.a(s) + tr.eps(s));
  }
  tr.index = tr.psi.colwise().mean().transpose();

  std::poisson_distribution<int> pois(c.visit_mean);
  std::uniform_int_distribution<int> list_len(1, c.max_list_length);
  for (int t = 0; t < c.Y; ++t) {
    for (int s = 0; s < c.S; ++s) {
      if (c.visit_prob < 1.0 && !bernoulli(rng, c.visit_prob)) continue;
      int n = pois(rng);
      if (c.visits == VisitModel::OnePlusPoisson) ++n;
      n = std::min(n, 365);
      if (n == 0) continue;
      const bool z = bernoulli(rng, tr.psi(s, t));
      const double p = logistic(tr.u(t));
      for (int day : sim_detail::distinct_days(n, rng)) {
        VisitRecord r;
        r.site_id = tr.site_ids[static_cast<std::size_t>(s)];
        r.easting = tr.coords(s, 0);
        r.northing = tr.coords(s, 1);
        r.year = tr.years[static_cast<std::size_t>(t)];
        r.julian_day = day;
        r.list_length = list_len(rng);
        r.detected = (z && bernoulli(rng, p)) ? 1 : 0;
        out.records.push_back(std::move(r));
      }
    }
  }
  return out;
}

struct RecoveryReport {
  int years = 0;
  int index_covered = 0;
  Eigen::VectorXd true_index;  // over the fitted dataset's sites
  Eigen::VectorXd index_lower;
  Eigen::VectorXd index_upper;
  int psi_year = 0;
  int sites = 0;
  int psi_covered = 0;
  double psi_coverage = 0.0;
  double spatial_rmse = 0.0;  // centred posterior-median (a~ + eps) against centred true (a + eps)
};

// Compares a fitted chain against the generating truth. `psi_year` indexes
// the dataset's years.
inline RecoveryReport score_recovery(const ChainOutput& chain, const Dataset& ds, const Truth& truth, int psi_year = 0,
                                     double level = 0.95) {
  if (chain.draws() < 1) throw Error(ErrorKind::InvalidInput, "score_recovery: chain has no draws");
  if (chain.eps.cols() != ds.num_sites() || chain.index.cols() != ds.num_years()) {
    throw Error(ErrorKind::InvalidInput, "score_recovery: chain does not match the dataset");
  }
  if (psi_year < 0 || psi_year >= ds.num_years()) throw Error(ErrorKind::InvalidParameter, "score_recovery: psi_year out of range");

  std::unordered_map<std::string, int> by_id;
  for (std::size_t s = 0; s < truth.site_ids.size(); ++s) by_id.emplace(truth.site_ids[s], static_cast<int>(s));
  std::vector<int> truth_site(static_cast<std::size_t>(ds.num_sites()), -1);
  for (int s = 0; s < ds.num_sites(); ++s) {
    const auto& id = ds.site_ids[static_cast<std::size_t>(s)];
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorKind::InvalidInput, "score_recovery: site '" + id + "' not in truth");
    truth_site[static_cast<std::size_t>(s)] = it->second;
  }
  std::vector<int> truth_year(static_cast<std::size_t>(ds.num_years()), -1);
  for (int t = 0; t < ds.num_years(); ++t) {
    const auto it = std::find(truth.years.begin(), truth.years.end(), ds.years[static_cast<std::size_t>(t)]);
    if (it == truth.years.end()) throw Error(ErrorKind::InvalidInput, "score_recovery: year not in truth");
    truth_year[static_cast<std::size_t>(t)] = static_cast<int>(it - truth.years.begin());
  }

  const double lo_p = 0.5 * (1.0 - level);
  const double hi_p = 1.0 - lo_p;
  auto interval = [&](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::pair<double, double>{quantile_sorted(v, lo_p), quantile_sorted(v, hi_p)};
  };

  RecoveryReport r;
  const int Y = ds.num_years();
  const int S = ds.num_sites();
  r.years = Y;
  r.true_index.resize(Y);
  r.index_lower.resize(Y);
  r.index_upper.resize(Y);
  for (int t = 0; t < Y; ++t) {
    double m = 0.0;
    for (int s = 0; s < S; ++s) m += truth.psi(truth_site[static_cast<std::size_t>(s)], truth_year[static_cast<std::size_t>(t)]);
    r.true_index(t) = m / S;
    const auto [lo, hi] = interval(column(chain.index, t));
    r.index_lower(t) = lo;
    r.index_upper(t) = hi;
    if (lo <= r.true_index(t) && r.true_index(t) <= hi) ++r.index_covered;
  }

  const OccupancySurface surface(ds, chain.site_cell);
  const Eigen::MatrixXd psi = surface.psi_draws(chain, psi_year);
  r.psi_year = psi_year;
  r.sites = S;
  for (int s = 0; s < S; ++s) {
    const auto [lo, hi] = interval(column(psi, s));
    const double v = truth.psi(truth_site[static_cast<std::size_t>(s)], truth_year[static_cast<std::size_t>(psi_year)]);
    if (lo <= v && v <= hi) ++r.psi_covered;
  }
  r.psi_coverage = static_cast<double>(r.psi_covered) / S;

  Eigen::VectorXd est(S);
  Eigen::VectorXd tru(S);
  for (int s = 0; s < S; ++s) {
    std::vector<double> v(static_cast<std::size_t>(chain.draws()));
    for (long d = 0; d < chain.draws(); ++d) {
      double x = chain.eps(d, s);
      if (chain.a_tilde.cols() > 0) x += chain.a_tilde(d, chain.site_cell[static_cast<std::size_t>(s)]);
      v[static_cast<std::size_t>(d)] = x;
    }
    std::sort(v.begin(), v.end());
    est(s) = quantile_sorted(v, 0.5);
    const int ts = truth_site[static_cast<std::size_t>(s)];
    tru(s) = truth.a(ts) + truth.eps(ts);
  }
  est.array() -= est.mean();
  tru.array() -= tru.mean();
  r.spatial_rmse = std::sqrt((est - tru).squaredNorm() / S);
  return r;
}

}  // namespace fastocc

#endif  // FASTOCC_SIMULATE_HPP
