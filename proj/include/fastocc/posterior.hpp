#ifndef FASTOCC_POSTERIOR_HPP
#define FASTOCC_POSTERIOR_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fastocc/data_model.hpp"
#include "fastocc/error.hpp"
#include "fastocc/rng.hpp"
#include "fastocc/state.hpp"

namespace fastocc {

struct ChainMetadata {
  std::uint64_t seed = 0;
  long iterations = 0;
  long burnin = 0;
  long thin = 1;
  int threads = 1;
  bool spatial = true;
  bool year_detection = true;
  double grid_step = 0.0;
  std::vector<double> ls_grid;
  Priors priors;
  int num_obs = 0, num_units = 0, num_sites = 0, num_years = 0, num_cells = 0;
  double temporal_acceptance = 0.0;
  double temporal_proposal_scale = 0.0;
  long temporal_rejected_nonfinite = 0;
  long spatial_weight_underflow = 0;
  double max_relative_jitter = 0.0;
  double seconds_total = 0.0;
  double seconds_per_iteration = 0.0;
};

// Thinned draws of a single chain plus per-draw derived quantities.
struct ChainOutput {
  std::vector<int> years;
  std::vector<int> site_cell;  // SoD cell of each site
  std::vector<std::string> occupancy_names;
  std::vector<std::string> detection_names;

  std::vector<std::string> scalar_names;
  Eigen::MatrixXd scalars;  // draws x scalar_names
  Eigen::MatrixXd b;
  Eigen::MatrixXd u;
  Eigen::MatrixXd beta_psi;
  Eigen::MatrixXd beta_p;
  Eigen::MatrixXd a_tilde;
  Eigen::MatrixXd eps;

  Eigen::MatrixXd index;            // draws x Y, occupancy index
  Eigen::MatrixXd detection_trend;  // draws x Y, p at mean covariates
  std::vector<int> season_days;
  Eigen::MatrixXd season;  // draws x days, p across the season in the reference year
  int season_year_index = 0;

  Eigen::MatrixXi gof_year;    // draws x Y replicate detection totals
  Eigen::MatrixXi gof_region;  // draws x M
  Eigen::VectorXi observed_year;
  Eigen::VectorXi observed_region;

  ChainMetadata meta;

  long draws() const { return static_cast<long>(index.rows()); }
};

// Occupancy probabilities psi_{t,s} for every (site, year) pair, including
// pairs without sampling units.
class OccupancySurface {
 public:
  OccupancySurface(const Dataset& ds, std::vector<int> site_cell)
      : ds_(&ds), site_cell_(std::move(site_cell)) {
    const int S = ds.num_sites();
    const int Y = ds.num_years();
    const auto p = ds.occupancy_x.cols();
    pair_x_.resize(Y);
    for (int t = 0; t < Y; ++t) {
      pair_x_[static_cast<std::size_t>(t)].resize(S, p);
      for (int s = 0; s < S; ++s) pair_x_[static_cast<std::size_t>(t)].row(s) = occupancy_row(ds, s, t).transpose();
    }
  }

  const std::vector<int>& site_cell() const { return site_cell_; }

  // S-vector of logit(psi) for year t.
  Eigen::VectorXd logit_psi(int t, double mu_psi, const Eigen::VectorXd& beta_psi, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& a_tilde, const Eigen::VectorXd& eps) const {
    const int S = ds_->num_sites();
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(S, mu_psi + b(t));
    if (beta_psi.size() > 0) eta += pair_x_[static_cast<std::size_t>(t)] * beta_psi;
    eta += eps;
    if (a_tilde.size() > 0) {
      for (int s = 0; s < S; ++s) eta(s) += a_tilde(site_cell_[static_cast<std::size_t>(s)]);
    }
    return eta;
  }

  Eigen::VectorXd psi(int t, const ModelState& st) const {
    Eigen::VectorXd eta = logit_psi(t, st.mu_psi, st.beta_psi, st.b, st.a_tilde, st.eps);
    for (Eigen::Index s = 0; s < eta.size(); ++s) eta(s) = logistic(eta(s));
    return eta;
  }

  // I_t = mean over sites of psi_{t,s}
  Eigen::VectorXd index(const ModelState& st) const {
    const int Y = ds_->num_years();
    Eigen::VectorXd out(Y);
    for (int t = 0; t < Y; ++t) out(t) = psi(t, st).mean();
    return out;
  }

  // draws x S matrix of psi_{t,s} reconstructed from stored chain draws.
  Eigen::MatrixXd psi_draws(const ChainOutput& chain, int t) const {
    const long n = chain.draws();
    Eigen::MatrixXd out(n, ds_->num_sites());
    for (long d = 0; d < n; ++d) {
      const Eigen::VectorXd eta =
          logit_psi(t, chain.scalars(d, 0), chain.beta_psi.row(d).transpose(), chain.b.row(d).transpose(),
                    chain.a_tilde.row(d).transpose(), chain.eps.row(d).transpose());
      for (Eigen::Index s = 0; s < eta.size(); ++s) out(d, s) = logistic(eta(s));
    }
    return out;
  }

 private:
  const Dataset* ds_;
  std::vector<int> site_cell_;
  std::vector<Eigen::MatrixXd> pair_x_;
};

inline Eigen::VectorXd occupancy_index(const Dataset& ds, std::vector<int> site_cell, const ModelState& st) {
  return OccupancySurface(ds, std::move(site_cell)).index(st);
}

// Detection probability p_i of every observation under the state.
inline Eigen::VectorXd detection_probabilities(const Dataset& ds, const ModelState& st) {
  const int N = ds.num_obs();
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(N);
  if (st.beta_p.size() > 0) eta = ds.detection_x * st.beta_p;
  for (int i = 0; i < N; ++i) eta(i) = logistic(eta(i) + st.u(ds.obs_year(i)));
  return eta;
}

struct GofStatistics {
  Eigen::VectorXi per_year;
  Eigen::VectorXi per_region;
};

// Yearly and regional detection totals of a detection vector y.
inline GofStatistics detection_totals(const Dataset& ds, std::span<const int> site_cell, int n_regions,
                                      std::span<const int> y) {
  GofStatistics g;
  g.per_year = Eigen::VectorXi::Zero(ds.num_years());
  g.per_region = Eigen::VectorXi::Zero(n_regions);
  for (int i = 0; i < ds.num_obs(); ++i) {
    if (y[static_cast<std::size_t>(i)] == 0) continue;
    const int j = ds.unit_of_obs[static_cast<std::size_t>(i)];
    g.per_year(ds.unit_year[static_cast<std::size_t>(j)]) += 1;
    g.per_region(site_cell[static_cast<std::size_t>(ds.unit_site[static_cast<std::size_t>(j)])]) += 1;
  }
  return g;
}

// Replicate data y~_i ~ Be(p_i z_{k_i}) under the state, totalled by year and region.
inline GofStatistics gof_replicates(const Dataset& ds, std::span<const int> site_cell, int n_regions,
                                    const ModelState& st, Rng& rng) {
  const Eigen::VectorXd p = detection_probabilities(ds, st);
  std::vector<int> rep(static_cast<std::size_t>(ds.num_obs()), 0);
  for (int i = 0; i < ds.num_obs(); ++i) {
    const int j = ds.unit_of_obs[static_cast<std::size_t>(i)];
    const double u = uniform01(rng);
    if (st.z[static_cast<std::size_t>(j)] != 0 && u < p(i)) rep[static_cast<std::size_t>(i)] = 1;
  }
  return detection_totals(ds, site_cell, n_regions, rep);
}

// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw Error(ErrorKind::InvalidInput, "quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Effective sample size from the initial monotone sequence of paired
// autocorrelations.
inline double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw Error(ErrorKind::InvalidInput, "ess of empty sample");
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - mean) * (x[t + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return static_cast<double>(n);

  double tau = -1.0;
  double prev_pair = INFINITY;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (autocov(2 * m) + autocov(2 * m + 1)) / g0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(n) / tau;
}

struct Interval {
  double level = 0.95;
  double lower = 0.0;
  double upper = 0.0;
};

struct Summary {
  double median = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  std::vector<Interval> intervals;
};

// Median, equal-tailed credible intervals at each level, and ESS.
inline Summary summarize(std::span<const double> draws, const std::vector<double>& levels = {0.95}) {
  if (draws.empty()) throw Error(ErrorKind::InvalidInput, "summarize: empty chain");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  s.median = quantile_sorted(sorted, 0.5);
  for (double v : draws) s.mean += v;
  s.mean /= static_cast<double>(draws.size());
  for (double v : draws) s.sd += (v - s.mean) * (v - s.mean);
  s.sd = draws.size() > 1 ? std::sqrt(s.sd / static_cast<double>(draws.size() - 1)) : 0.0;
  s.ess = effective_sample_size(draws);
  for (double level : levels) {
    const double tail = 0.5 * (1.0 - level);
    s.intervals.push_back({level, quantile_sorted(sorted, tail), quantile_sorted(sorted, 1.0 - tail)});
  }
  return s;
}

inline std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) v[static_cast<std::size_t>(r)] = m(r, c);
  return v;
}

struct SummaryRow {
  std::string name;
  Summary summary;
};

// Summaries of every recorded scalar and vector parameter plus the index.
inline std::vector<SummaryRow> summarize_chain(const ChainOutput& chain,
                                               const std::vector<double>& levels = {0.95}) {
  if (chain.draws() == 0) throw Error(ErrorKind::InvalidInput, "summarize: chain has no draws");
  std::vector<SummaryRow> rows;
  auto add = [&](const std::string& prefix, const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const std::string label = c < static_cast<Eigen::Index>(names.size())
                                    ? names[static_cast<std::size_t>(c)]
                                    : std::to_string(c + 1);
      rows.push_back({prefix + label, summarize(column(m, c), levels)});
    }
  };
  std::vector<std::string> year_names;
  for (int y : chain.years) year_names.push_back(std::to_string(y));
  add("", chain.scalars, chain.scalar_names);
  add("b[", chain.b, year_names);
  add("u[", chain.u, year_names);
  add("beta_psi[", chain.beta_psi, chain.occupancy_names);
  add("beta_p[", chain.beta_p, chain.detection_names);
  add("index[", chain.index, year_names);
  for (auto& r : rows) {
    if (r.name.find('[') != std::string::npos) r.name += "]";
  }
  return rows;
}

enum class GofClass { Inside95, Between95And99, Outside99 };

inline const char* to_string(GofClass c) {
  switch (c) {
    case GofClass::Inside95: return "inside-95";
    case GofClass::Between95And99: return "between-95-99";
    case GofClass::Outside99: return "outside-99";
  }
  return "?";
}

struct GofEntry {
  int id = 0;
  double observed = 0.0;
  double median = 0.0;
  double lower95 = 0.0, upper95 = 0.0;
  double lower99 = 0.0, upper99 = 0.0;
  GofClass cls = GofClass::Inside95;
  int direction = 0;  // -1 observed below the interval, +1 above
};

struct GofReport {
  std::vector<GofEntry> entries;
  double inside95_fraction = 0.0;
};

// Places each observed statistic relative to the 95% and 99% posterior
// predictive intervals of its replicates (draws x statistics).
inline GofReport gof_report(const Eigen::MatrixXi& replicates, const Eigen::VectorXi& observed) {
  if (replicates.rows() == 0) throw Error(ErrorKind::InvalidInput, "gof: no replicate draws (gof_draws)");
  if (replicates.cols() != observed.size()) {
    throw Error(ErrorKind::InvalidInput, "gof: replicate and observed statistic counts differ");
  }
  GofReport rep;
  int inside = 0;
  for (Eigen::Index c = 0; c < replicates.cols(); ++c) {
    std::vector<double> v(static_cast<std::size_t>(replicates.rows()));
    for (Eigen::Index r = 0; r < replicates.rows(); ++r) v[static_cast<std::size_t>(r)] = replicates(r, c);
    std::sort(v.begin(), v.end());
    GofEntry e;
    e.id = static_cast<int>(c);
    e.observed = observed(c);
    e.median = quantile_sorted(v, 0.5);
    e.lower95 = quantile_sorted(v, 0.025);
    e.upper95 = quantile_sorted(v, 0.975);
    e.lower99 = quantile_sorted(v, 0.005);
    e.upper99 = quantile_sorted(v, 0.995);
    if (e.observed >= e.lower95 && e.observed <= e.upper95) {
      e.cls = GofClass::Inside95;
      ++inside;
    } else if (e.observed >= e.lower99 && e.observed <= e.upper99) {
      e.cls = GofClass::Between95And99;
    } else {
      e.cls = GofClass::Outside99;
    }
    if (e.observed < e.lower95) e.direction = -1;
    if (e.observed > e.upper95) e.direction = 1;
    rep.entries.push_back(e);
  }
  rep.inside95_fraction = replicates.cols() > 0 ? static_cast<double>(inside) / static_cast<double>(replicates.cols()) : 1.0;
  return rep;
}

}  // namespace fastocc

#endif  // FASTOCC_POSTERIOR_HPP
