#ifndef FASTOCC_SAMPLER_HPP
#define FASTOCC_SAMPLER_HPP

// Blocked Gibbs sampler for the spatio-temporal occupancy/detection model
//
//   y_i ~ Be(p_i z_{k_i}),  logit p_i = u_{t_i} + X_i beta_p
//   z_j ~ Be(psi_j),        logit psi_j = mu + X^C_j beta + b_{t_j} + a~_{cell(s_j)} + eps_{s_j}
//
// with b ~ GP over years, a~ ~ GP over the occupied cells of a uniform grid and
// eps_s iid normal. Both logistic layers are augmented with Polya-Gamma
// variables so the regression blocks have Gaussian full conditionals. One
// iteration runs
//
//   omega_psi -> (mu, beta, b, a~) -> eps -> (l_T, sigma_T) -> (l_S, sigma_S)
//   -> sigma_eps -> z -> (omega_p, u, beta_p, mu_p, sigma_p)
//
// (l_T, sigma_T) are updated by Metropolis-Hastings on their likelihood with
// b integrated out, followed by an exact redraw of b.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fastocc/data_model.hpp"
#include "fastocc/design.hpp"
#include "fastocc/error.hpp"
#include "fastocc/gp_kernel.hpp"
#include "fastocc/pg.hpp"
#include "fastocc/posterior.hpp"
#include "fastocc/rng.hpp"
#include "fastocc/state.hpp"

namespace fastocc {

struct SamplerOptions {
  bool spatial = true;
  bool year_detection = true;
  double grid_step = 20.0;
  std::vector<double> ls_grid;  // empty: log-spaced from the grid step to the study-area diameter
  int ls_grid_size = 10;
  int threads = 1;
  bool debug_dense_check = false;
  double temporal_step = 0.5;  // initial random-walk scale on (log l_T, log sigma_T)
  int season_step = 5;         // julian-day spacing of the seasonal detection curve
  int season_year_index = -1;  // reference year for the seasonal curve, -1 = last
};

struct McmcConfig {
  long iterations = 1000;  // post burn-in
  long burnin = 500;
  long thin = 1;
  std::uint64_t seed = 1;
};

enum StreamTag : std::uint64_t {
  kTagOmegaPsi = 1,
  kTagEps = 2,
  kTagZ = 3,
  kTagOmegaP = 4,
  kTagGof = 5,
};

inline constexpr std::size_t kLane = 2048;

namespace detail {

// Runs fn(lane, begin, end) over fixed-size lanes of [0, n), possibly in
// parallel; the first exception raised in any lane is rethrown.
inline void for_each_lane(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t lanes = (n + kLane - 1) / kLane;
  std::exception_ptr error;
  std::mutex mu;
#pragma omp parallel for schedule(static) num_threads(std::max(1, threads))
  for (long lane = 0; lane < static_cast<long>(lanes); ++lane) {
    try {
      const std::size_t b = static_cast<std::size_t>(lane) * kLane;
      fn(static_cast<std::size_t>(lane), b, std::min(n, b + kLane));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

inline double log_gamma_density(double x, double shape, double rate) {
  if (!(x > 0.0)) return -INFINITY;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double log_inverse_gamma_density(double v, double shape, double scale) {
  if (!(v > 0.0)) return -INFINITY;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(v) - scale / v;
}

}  // namespace detail

// One draw from N(P^{-1} r, P^{-1}) given the precision P and r.
inline Eigen::VectorXd draw_gaussian_canonical(const Eigen::MatrixXd& precision, const Eigen::VectorXd& rhs, Rng& rng,
                                               const std::string& block) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::IllConditioned, "posterior precision of the " + block + " block is not positive definite");
  }
  Eigen::VectorXd xi(precision.rows());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = std_normal(rng);
  Eigen::VectorXd out = llt.solve(rhs);
  out += llt.matrixU().solve(xi);
  return out;
}

// Conditional of a scalar effect e with prior N(0, v0) given PG-augmented
// units: precision sum_w + 1/v0, mean (sum_k) / precision.
struct NormalConditional {
  double mean = 0.0;
  double var = 0.0;
};

inline NormalConditional site_effect_conditional(double sum_omega, double sum_k, double prior_var) {
  const double var = 1.0 / (sum_omega + 1.0 / prior_var);
  return {var * sum_k, var};
}

// log p(z | l, sigma, omega, rest) with the year effects integrated out, up to
// a constant: with D = diag(sum of omega per year), h = per-year sums of
// k_j - c_j omega_j and K = K_{l, sigma}(w),
//   -1/2 log|K| - 1/2 log|D + K^{-1}| + 1/2 h^T (D + K^{-1})^{-1} h,
// evaluated as -1/2 log|I + D^1/2 K D^1/2| + 1/2 (h^T K h - v^T B^{-1} v),
// v = D^1/2 K h, B = I + D^1/2 K D^1/2.
inline double temporal_log_marginal(const Eigen::VectorXd& D, const Eigen::VectorXd& h, const Eigen::MatrixXd& K) {
  const Eigen::Index Y = D.size();
  const Eigen::VectorXd dh = D.array().sqrt().matrix();
  Eigen::MatrixXd B = dh.asDiagonal() * K * dh.asDiagonal();
  B.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success) return -INFINITY;
  double logdet = 0.0;
  for (Eigen::Index t = 0; t < Y; ++t) logdet += std::log(llt.matrixLLT()(t, t));
  logdet *= 2.0;
  const Eigen::VectorXd kh = K * h;
  const Eigen::VectorXd v = dh.asDiagonal() * kh;
  const double quad = h.dot(kh) - v.dot(llt.solve(v));
  return -0.5 * logdet + 0.5 * quad;
}

class OccupancyModel {
 public:
  OccupancyModel(const Dataset& ds, Priors priors, SamplerOptions options, std::uint64_t seed)
      : ds_(ds), priors_(priors), options_(std::move(options)), seed_(seed) {
    validate(ds_);
    const int S = ds_.num_sites();
    const int J = ds_.num_units();
    const int N = ds_.num_obs();
    const int Y = ds_.num_years();

    grid_ = build_sod_grid(ds_.sites, options_.grid_step);
    unit_cell_.resize(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
      unit_cell_[static_cast<std::size_t>(j)] = grid_.assignment[static_cast<std::size_t>(ds_.unit_site[static_cast<std::size_t>(j)])];
    }
    obs_year_.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) obs_year_[static_cast<std::size_t>(i)] = ds_.obs_year(i);

    forced_.assign(static_cast<std::size_t>(J), 0);
    for (int i = 0; i < N; ++i) {
      if (ds_.y[static_cast<std::size_t>(i)] == 1) forced_[static_cast<std::size_t>(ds_.unit_of_obs[static_cast<std::size_t>(i)])] = 1;
    }
    units_of_site_offset_.assign(static_cast<std::size_t>(S) + 1, 0);
    for (int j = 0; j < J; ++j) ++units_of_site_offset_[static_cast<std::size_t>(ds_.unit_site[static_cast<std::size_t>(j)]) + 1];
    for (int s = 0; s < S; ++s) units_of_site_offset_[static_cast<std::size_t>(s) + 1] += units_of_site_offset_[static_cast<std::size_t>(s)];

    std::vector<double> w(ds_.years.begin(), ds_.years.end());
    temporal_points_ = SupportPoints::from_1d(w);

    // reference scales for the length-scale priors
    if (priors_.scale_lt <= 0.0) {
      priors_.scale_lt = Y > 1 ? (w.back() - w.front()) / 10.0 : 1.0;
    }
    const double diameter = study_diameter();
    if (priors_.scale_ls <= 0.0) priors_.scale_ls = diameter > 0.0 ? diameter / 10.0 : options_.grid_step;

    occupancy_design_.intercept = true;
    occupancy_design_.dense = &ds_.occupancy_x;
    occupancy_design_.rows = J;
    occupancy_design_.factors.push_back({std::span<const int>(ds_.unit_year), Y});
    if (options_.spatial) {
      occupancy_design_.factors.push_back({std::span<const int>(unit_cell_), grid_.num_centers()});
      setup_spatial_grid(diameter);
    }

    detection_design_.dense = &ds_.detection_x;
    detection_design_.rows = N;
    if (options_.year_detection) {
      detection_design_.intercept = false;
      detection_design_.factors.push_back({std::span<const int>(obs_year_), Y});
    } else {
      detection_design_.intercept = true;
    }
    all_units_ = all_rows(J);
    temporal_scale_ = options_.temporal_step;
    proposal_chol_ = Eigen::Matrix2d::Identity();
  }

  const Dataset& dataset() const { return ds_; }
  const Priors& priors() const { return priors_; }
  const SamplerOptions& options() const { return options_; }
  const SodGrid& grid() const { return grid_; }
  const std::vector<double>& ls_grid() const { return ls_grid_; }
  const std::vector<int>& unit_cell() const { return unit_cell_; }
  const DesignView& occupancy_design() const { return occupancy_design_; }
  const SupportPoints& temporal_points() const { return temporal_points_; }
  int num_cells() const { return grid_.num_centers(); }

  void set_iteration(long it) { iteration_ = it; }
  // Proposal adaptation for (l_T, sigma_T) runs while iteration < burnin.
  void set_adaptation(long burnin) { adapt_until_ = burnin; }

  long temporal_accepted() const { return temporal_accepted_; }
  long temporal_proposed() const { return temporal_proposed_; }
  long temporal_rejected_nonfinite() const { return temporal_nonfinite_; }
  long spatial_underflow() const { return spatial_underflow_; }
  double temporal_scale() const { return temporal_scale_; }
  void set_temporal_scale(double s) { temporal_scale_ = s; }
  double max_relative_jitter() const { return max_relative_jitter_; }

  ModelState initial_state(Rng& rng) const {
    const int Y = ds_.num_years();
    ModelState st;
    st.mu_psi = priors_.mu0_psi;
    st.beta_psi = Eigen::VectorXd::Zero(ds_.occupancy_x.cols());
    st.b = Eigen::VectorXd::Zero(Y);
    st.a_tilde = Eigen::VectorXd::Zero(options_.spatial ? grid_.num_centers() : 0);
    st.eps = Eigen::VectorXd::Zero(ds_.num_sites());
    st.u = Eigen::VectorXd::Constant(Y, priors_.mu0_p);
    st.beta_p = Eigen::VectorXd::Zero(ds_.detection_x.cols());
    st.z.resize(static_cast<std::size_t>(ds_.num_units()));
    for (std::size_t j = 0; j < st.z.size(); ++j) st.z[j] = forced_[j] ? 1 : (bernoulli(rng, 0.5) ? 1 : 0);
    st.omega_psi = Eigen::VectorXd::Constant(ds_.num_units(), 0.25);
    st.omega_p = Eigen::VectorXd::Constant(ds_.num_obs(), 0.25);
    st.sigma_t = std::sqrt(prior_variance_mean(priors_.a_sigma_t, priors_.b_sigma_t));
    st.l_t = priors_.scale_lt * priors_.a_lt / priors_.b_lt;
    st.sigma_eps = std::sqrt(prior_variance_mean(priors_.a_eps, priors_.b_eps));
    st.mu_p = priors_.mu0_p;
    st.sigma_p = std::sqrt(prior_variance_mean(priors_.a_sigma_p, priors_.b_sigma_p));
    if (options_.spatial) {
      st.ls_index = static_cast<int>(ls_grid_.size() / 2);
      st.l_s = ls_grid_[static_cast<std::size_t>(st.ls_index)];
      st.sigma_s = std::sqrt(prior_variance_mean(priors_.a_sigma_s, priors_.b_sigma_s));
    } else {
      st.ls_index = 0;
      st.l_s = 0.0;
      st.sigma_s = 0.0;
    }
    return st;
  }

  // logit(psi_j) for every sampling unit.
  Eigen::VectorXd occupancy_eta(const ModelState& st) const {
    const int J = ds_.num_units();
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(J, st.mu_psi);
    if (st.beta_psi.size() > 0) eta.noalias() += ds_.occupancy_x * st.beta_psi;
    for (int j = 0; j < J; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      double v = st.b(ds_.unit_year[ju]) + st.eps(ds_.unit_site[ju]);
      if (options_.spatial) v += st.a_tilde(unit_cell_[ju]);
      eta(j) += v;
    }
    return eta;
  }

  // logit(p_i) for every observation.
  Eigen::VectorXd detection_eta(const ModelState& st) const {
    const int N = ds_.num_obs();
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(N);
    if (st.beta_p.size() > 0) eta.noalias() = ds_.detection_x * st.beta_p;
    for (int i = 0; i < N; ++i) eta(i) += st.u(obs_year_[static_cast<std::size_t>(i)]);
    return eta;
  }

  void update_omega_psi(ModelState& st) const {
    const Eigen::VectorXd eta = occupancy_eta(st);
    detail::for_each_lane(static_cast<std::size_t>(ds_.num_units()), options_.threads,
                          [&](std::size_t lane, std::size_t b, std::size_t e) {
                            Rng rng = make_substream(seed_, static_cast<std::uint64_t>(iteration_), kTagOmegaPsi, lane);
                            for (std::size_t j = b; j < e; ++j) {
                              st.omega_psi(static_cast<Eigen::Index>(j)) = draw_pg1(eta(static_cast<Eigen::Index>(j)), rng);
                            }
                          });
  }

  // Pseudo-response of the occupancy regression with eps absorbed as an offset.
  Eigen::VectorXd occupancy_response(const ModelState& st) const {
    const int J = ds_.num_units();
    Eigen::VectorXd k(J);
    for (int j = 0; j < J; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      k(j) = (st.z[ju] ? 0.5 : -0.5) - st.omega_psi(j) * st.eps(ds_.unit_site[ju]);
    }
    return k;
  }

  CrossProducts occupancy_cross_products(const ModelState& st) const {
    const Eigen::VectorXd k = occupancy_response(st);
    return sparse_cross_products(occupancy_design_, all_units_, std::span<const double>(st.omega_psi.data(), st.omega_psi.size()),
                                 std::span<const double>(k.data(), k.size()), options_.threads);
  }

  // Block-diagonal prior precision and prior mean of (mu, beta, b, a~).
  void occupancy_prior(const ModelState& st, Eigen::MatrixXd& precision, Eigen::VectorXd& mean) {
    const int n = occupancy_design_.num_columns();
    const int p = static_cast<int>(ds_.occupancy_x.cols());
    const int Y = ds_.num_years();
    precision = Eigen::MatrixXd::Zero(n, n);
    mean = Eigen::VectorXd::Zero(n);
    precision(0, 0) = 1.0 / (priors_.sigma0_psi * priors_.sigma0_psi);
    mean(0) = priors_.mu0_psi;
    for (int c = 1; c <= p; ++c) precision(c, c) = 1.0 / priors_.phi_psi;
    precision.block(1 + p, 1 + p, Y, Y) = temporal_kernel(st).inverse;
    if (options_.spatial) {
      const int M = grid_.num_centers();
      precision.block(1 + p + Y, 1 + p + Y, M, M) =
          ls_inverse_[static_cast<std::size_t>(st.ls_index)] / (st.sigma_s * st.sigma_s);
    }
  }

  void update_occupancy_block(ModelState& st, Rng& rng) {
    const CrossProducts cp = occupancy_cross_products(st);
    Eigen::MatrixXd precision;
    Eigen::VectorXd prior_mean;
    occupancy_prior(st, precision, prior_mean);
    Eigen::MatrixXd xtwx = cp.xtwx(occupancy_design_);
    if (options_.debug_dense_check) check_dense(occupancy_design_, all_units_, st.omega_psi, xtwx, "occupancy");
    Eigen::VectorXd rhs = cp.xtk(occupancy_design_) + precision * prior_mean;
    precision += xtwx;
    const Eigen::VectorXd draw = draw_gaussian_canonical(precision, rhs, rng, "occupancy");

    const int p = static_cast<int>(ds_.occupancy_x.cols());
    const int Y = ds_.num_years();
    st.mu_psi = draw(0);
    st.beta_psi = draw.segment(1, p);
    st.b = draw.segment(1 + p, Y);
    if (options_.spatial) st.a_tilde = draw.segment(1 + p + Y, grid_.num_centers());
  }

  void update_eps(ModelState& st) const {
    const int S = ds_.num_sites();
    const int J = ds_.num_units();
    const Eigen::VectorXd eta = occupancy_eta(st);
    Eigen::VectorXd sum_w = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd sum_k = Eigen::VectorXd::Zero(S);
    for (int j = 0; j < J; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const int s = ds_.unit_site[ju];
      const double r = eta(j) - st.eps(s);
      sum_w(s) += st.omega_psi(j);
      sum_k(s) += (st.z[ju] ? 0.5 : -0.5) - st.omega_psi(j) * r;
    }
    const double prior_var = st.sigma_eps * st.sigma_eps;
    detail::for_each_lane(static_cast<std::size_t>(S), options_.threads, [&](std::size_t lane, std::size_t b, std::size_t e) {
      Rng rng = make_substream(seed_, static_cast<std::uint64_t>(iteration_), kTagEps, lane);
      for (std::size_t s = b; s < e; ++s) {
        const auto si = static_cast<Eigen::Index>(s);
        const NormalConditional c = site_effect_conditional(sum_w(si), sum_k(si), prior_var);
        st.eps(si) = c.mean + std::sqrt(c.var) * std_normal(rng);
      }
    });
  }

  // D (per-year omega sums) and h (per-year sums of k_j - c_j omega_j), where
  // c_j is the unit's linear predictor without the year effect.
  void temporal_stats(const ModelState& st, Eigen::VectorXd& D, Eigen::VectorXd& h) const {
    const int Y = ds_.num_years();
    const Eigen::VectorXd eta = occupancy_eta(st);
    D = Eigen::VectorXd::Zero(Y);
    h = Eigen::VectorXd::Zero(Y);
    for (int j = 0; j < ds_.num_units(); ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const int t = ds_.unit_year[ju];
      const double c = eta(j) - st.b(t);
      D(t) += st.omega_psi(j);
      h(t) += (st.z[ju] ? 0.5 : -0.5) - c * st.omega_psi(j);
    }
  }

  // Log prior of (l_T, sigma_T) on the (log l, log sigma) scale, Jacobian included.
  double temporal_log_prior(double l, double sigma) const {
    const double scale = priors_.scale_lt;
    const double v = sigma * sigma;
    return detail::log_gamma_density(l / scale, priors_.a_lt, priors_.b_lt) + std::log(l / scale) +
           detail::log_inverse_gamma_density(v, priors_.a_sigma_t, priors_.b_sigma_t) + std::log(2.0 * v);
  }

  double temporal_log_target(const Eigen::VectorXd& D, const Eigen::VectorXd& h, double l, double sigma) const {
    Covariance k;
    try {
      k = build_covariance({l, sigma}, temporal_points_);
    } catch (const Error&) {
      return -INFINITY;
    }
    return temporal_log_prior(l, sigma) + temporal_log_marginal(D, h, k.matrix);
  }

  void update_temporal_hypers(ModelState& st, Rng& rng) {
    Eigen::VectorXd D;
    Eigen::VectorXd h;
    temporal_stats(st, D, h);

    const double current = temporal_log_target(D, h, st.l_t, st.sigma_t);
    Eigen::Vector2d xi(std_normal(rng), std_normal(rng));
    const Eigen::Vector2d step = temporal_scale_ * (proposal_chol_ * xi);
    const double l_new = st.l_t * std::exp(step(0));
    const double s_new = st.sigma_t * std::exp(step(1));
    const double proposed = temporal_log_target(D, h, l_new, s_new);
    const double log_u = std::log(uniform01(rng));
    ++temporal_proposed_;
    bool accepted = false;
    if (!std::isfinite(proposed)) {
      ++temporal_nonfinite_;
    } else if (log_u < proposed - current || !std::isfinite(current)) {
      st.l_t = l_new;
      st.sigma_t = s_new;
      accepted = true;
      ++temporal_accepted_;
    }
    adapt_temporal(st, accepted);

    // exact redraw of b | (l_T, sigma_T), omega, z, rest
    const auto& kt = temporal_kernel(st);
    Eigen::MatrixXd precision = kt.inverse;
    precision.diagonal() += D;
    st.b = draw_gaussian_canonical(precision, h, rng, "year-effect");
  }

  // Full conditional of l_S over the grid values, then sigma_S^2 | a~, l_S.
  void update_spatial_hypers(ModelState& st, Rng& rng) {
    if (!options_.spatial) return;
    const int M = grid_.num_centers();
    const double v = st.sigma_s * st.sigma_s;
    std::vector<double> logw(ls_grid_.size());
    std::vector<double> quad(ls_grid_.size());
    double best = -INFINITY;
    for (std::size_t g = 0; g < ls_grid_.size(); ++g) {
      quad[g] = ls_cov_[g].quad_inverse(st.a_tilde);
      logw[g] = -0.5 * (M * std::log(v) + ls_cov_[g].log_det()) - 0.5 * quad[g] / v +
                detail::log_gamma_density(ls_grid_[g] / priors_.scale_ls, priors_.a_ls, priors_.b_ls);
      if (std::isfinite(logw[g])) best = std::max(best, logw[g]);
    }
    if (std::isfinite(best)) {
      double total = 0.0;
      for (double& w : logw) {
        w = std::isfinite(w) ? std::exp(w - best) : 0.0;
        total += w;
      }
      double u = uniform01(rng) * total;
      std::size_t pick = ls_grid_.size() - 1;
      for (std::size_t g = 0; g < logw.size(); ++g) {
        if (u < logw[g]) {
          pick = g;
          break;
        }
        u -= logw[g];
      }
      st.ls_index = static_cast<int>(pick);
      st.l_s = ls_grid_[pick];
    } else {
      ++spatial_underflow_;
    }
    const double q = quad[static_cast<std::size_t>(st.ls_index)];
    st.sigma_s = std::sqrt(inverse_gamma(rng, priors_.a_sigma_s + 0.5 * M, priors_.b_sigma_s + 0.5 * q));
  }

  void update_sigma_eps(ModelState& st, Rng& rng) const {
    const double S = static_cast<double>(st.eps.size());
    st.sigma_eps = std::sqrt(inverse_gamma(rng, priors_.a_eps + 0.5 * S, priors_.b_eps + 0.5 * st.eps.squaredNorm()));
  }

  // z_j = 1 where detected; otherwise Bernoulli with logit psi_j + sum log(1 - p_i).
  void update_z(ModelState& st) const {
    const Eigen::VectorXd eta = occupancy_eta(st);
    const Eigen::VectorXd eta_p = detection_eta(st);
    detail::for_each_lane(static_cast<std::size_t>(ds_.num_units()), options_.threads,
                          [&](std::size_t lane, std::size_t b, std::size_t e) {
                            Rng rng = make_substream(seed_, static_cast<std::uint64_t>(iteration_), kTagZ, lane);
                            for (std::size_t j = b; j < e; ++j) {
                              const double u = uniform01(rng);
                              if (forced_[j]) {
                                st.z[j] = 1;
                                continue;
                              }
                              double log_q = 0.0;
                              for (int o = ds_.unit_obs_offset[j]; o < ds_.unit_obs_offset[j + 1]; ++o) {
                                log_q += log1m_logistic(eta_p(ds_.unit_obs[static_cast<std::size_t>(o)]));
                              }
                              st.z[j] = u < logistic(eta(static_cast<Eigen::Index>(j)) + log_q) ? 1 : 0;
                            }
                          });
  }

  std::vector<int> occupied_observations(const ModelState& st) const {
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(ds_.num_obs()));
    for (int i = 0; i < ds_.num_obs(); ++i) {
      if (st.z[static_cast<std::size_t>(ds_.unit_of_obs[static_cast<std::size_t>(i)])]) rows.push_back(i);
    }
    return rows;
  }

  const DesignView& detection_design() const { return detection_design_; }

  void update_detection_block(ModelState& st, Rng& rng) {
    const std::vector<int> rows = occupied_observations(st);
    const Eigen::VectorXd eta_p = detection_eta(st);
    detail::for_each_lane(rows.size(), options_.threads, [&](std::size_t lane, std::size_t b, std::size_t e) {
      Rng r = make_substream(seed_, static_cast<std::uint64_t>(iteration_), kTagOmegaP, lane);
      for (std::size_t q = b; q < e; ++q) {
        const int i = rows[q];
        st.omega_p(i) = draw_pg1(eta_p(i), r);
      }
    });
    Eigen::VectorXd k(ds_.num_obs());
    for (int i = 0; i < ds_.num_obs(); ++i) k(i) = ds_.y[static_cast<std::size_t>(i)] - 0.5;
    const CrossProducts cp =
        sparse_cross_products(detection_design_, rows, std::span<const double>(st.omega_p.data(), st.omega_p.size()),
                              std::span<const double>(k.data(), k.size()), options_.threads);
    Eigen::MatrixXd xtwx = cp.xtwx(detection_design_);
    if (options_.debug_dense_check) check_dense(detection_design_, rows, st.omega_p, xtwx, "detection");

    const int n = detection_design_.num_columns();
    const int p = static_cast<int>(ds_.detection_x.cols());
    const int Y = ds_.num_years();
    Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd prior_mean = Eigen::VectorXd::Zero(n);
    const int i0 = detection_design_.intercept ? 1 : 0;
    if (detection_design_.intercept) {
      precision(0, 0) = 1.0 / (priors_.sigma0_p * priors_.sigma0_p);
      prior_mean(0) = priors_.mu0_p;
    }
    for (int c = 0; c < p; ++c) precision(i0 + c, i0 + c) = 1.0 / priors_.phi_p;
    if (options_.year_detection) {
      for (int t = 0; t < Y; ++t) {
        precision(p + t, p + t) = 1.0 / (st.sigma_p * st.sigma_p);
        prior_mean(p + t) = st.mu_p;
      }
    }
    Eigen::VectorXd rhs = cp.xtk(detection_design_) + precision * prior_mean;
    precision += xtwx;
    const Eigen::VectorXd draw = draw_gaussian_canonical(precision, rhs, rng, "detection");

    st.beta_p = draw.segment(i0, p);
    if (options_.year_detection) {
      st.u = draw.segment(p, Y);
      // mu_p | u and sigma_p^2 | u, mu_p
      const double prec = 1.0 / (priors_.sigma0_p * priors_.sigma0_p) + Y / (st.sigma_p * st.sigma_p);
      const double m = (priors_.mu0_p / (priors_.sigma0_p * priors_.sigma0_p) + st.u.sum() / (st.sigma_p * st.sigma_p)) / prec;
      st.mu_p = m + std_normal(rng) / std::sqrt(prec);
      const double ss = (st.u.array() - st.mu_p).square().sum();
      st.sigma_p = std::sqrt(inverse_gamma(rng, priors_.a_sigma_p + 0.5 * Y, priors_.b_sigma_p + 0.5 * ss));
    } else {
      st.u = Eigen::VectorXd::Constant(Y, draw(0));
      st.mu_p = draw(0);
    }
  }

  // One full Gibbs cycle.
  void step(ModelState& st, Rng& rng) {
    update_omega_psi(st);
    update_occupancy_block(st, rng);
    update_eps(st);
    update_temporal_hypers(st, rng);
    update_spatial_hypers(st, rng);
    update_sigma_eps(st, rng);
    update_z(st);
    update_detection_block(st, rng);
  }

  struct TemporalKernel {
    double l = -1.0;
    double sigma = -1.0;
    Covariance cov;
    Eigen::MatrixXd inverse;
  };

  const TemporalKernel& temporal_kernel(const ModelState& st) {
    if (st.l_t != kt_cache_.l || st.sigma_t != kt_cache_.sigma) {
      kt_cache_.cov = build_covariance({st.l_t, st.sigma_t}, temporal_points_);
      kt_cache_.inverse = kt_cache_.cov.inverse();
      kt_cache_.l = st.l_t;
      kt_cache_.sigma = st.sigma_t;
      max_relative_jitter_ = std::max(max_relative_jitter_, kt_cache_.cov.jitter / (st.sigma_t * st.sigma_t));
    }
    return kt_cache_;
  }

 private:
  static double prior_variance_mean(double shape, double scale) {
    return shape > 1.0 ? scale / (shape - 1.0) : scale;
  }

  double study_diameter() const {
    const auto& c = ds_.sites.coords;
    const double dx = c.col(0).maxCoeff() - c.col(0).minCoeff();
    const double dy = c.col(1).maxCoeff() - c.col(1).minCoeff();
    return std::sqrt(dx * dx + dy * dy);
  }

  void setup_spatial_grid(double diameter) {
    ls_grid_ = options_.ls_grid;
    if (ls_grid_.empty()) {
      const double lo = options_.grid_step;
      const double hi = std::max(diameter, lo);
      const int n = std::max(1, options_.ls_grid_size);
      for (int g = 0; g < n; ++g) {
        const double f = n == 1 ? 0.0 : static_cast<double>(g) / (n - 1);
        ls_grid_.push_back(lo * std::pow(hi / lo, f));
      }
      if (hi == lo) ls_grid_.resize(1);
    }
    for (double l : ls_grid_) {
      if (!(l > 0.0)) throw Error(ErrorKind::InvalidParameter, "ls_grid values must be positive");
      try {
        ls_cov_.push_back(build_covariance({l, 1.0}, grid_.centers));
      } catch (const Error& e) {
        throw Error(ErrorKind::IllConditioned, std::string("spatial kernel: ") + e.what());
      }
      ls_inverse_.push_back(ls_cov_.back().inverse());
      max_relative_jitter_ = std::max(max_relative_jitter_, ls_cov_.back().jitter);
    }
  }

  void adapt_temporal(const ModelState& st, bool accepted) {
    if (iteration_ >= adapt_until_) return;
    window_accepts_ += accepted ? 1 : 0;
    ++window_count_;
    log_samples_.push_back({std::log(st.l_t), std::log(st.sigma_t)});
    if (window_count_ < 50) return;
    const double rate = static_cast<double>(window_accepts_) / window_count_;
    if (rate < 0.25) temporal_scale_ *= 0.8;
    if (rate > 0.40) temporal_scale_ *= 1.25;
    window_accepts_ = 0;
    window_count_ = 0;
    if (log_samples_.size() >= 200) {
      Eigen::Vector2d mean = Eigen::Vector2d::Zero();
      for (const auto& x : log_samples_) mean += x;
      mean /= static_cast<double>(log_samples_.size());
      Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
      for (const auto& x : log_samples_) cov += (x - mean) * (x - mean).transpose();
      cov /= static_cast<double>(log_samples_.size() - 1);
      // normalise so the scale factor keeps its meaning
      const double tr = cov.trace();
      if (tr > 1e-12) {
        cov /= 0.5 * tr;
        cov.diagonal().array() += 1e-3;
        Eigen::LLT<Eigen::Matrix2d> llt(cov);
        if (llt.info() == Eigen::Success) proposal_chol_ = llt.matrixL();
      }
    }
  }

  void check_dense(const DesignView& d, const std::vector<int>& rows, const Eigen::VectorXd& omega,
                   const Eigen::MatrixXd& sparse, const char* block) const {
    const Eigen::MatrixXd x = dense_design(d);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d.rows);
    for (int r : rows) w(r) = omega(r);
    const Eigen::MatrixXd dense = x.transpose() * w.asDiagonal() * x;
    const double scale = std::max(1.0, dense.cwiseAbs().maxCoeff());
    const double err = (dense - sparse).cwiseAbs().maxCoeff() / scale;
    if (err > 1e-10) {
      throw Error(ErrorKind::Numerical, std::string("sparse/dense cross-product mismatch in ") + block +
                                            " block (relative error " + std::to_string(err) + ")");
    }
  }

  const Dataset& ds_;
  Priors priors_;
  SamplerOptions options_;
  std::uint64_t seed_;
  long iteration_ = 0;
  long adapt_until_ = 0;

  SodGrid grid_;
  std::vector<int> unit_cell_;
  std::vector<int> obs_year_;
  std::vector<std::uint8_t> forced_;
  std::vector<int> units_of_site_offset_;
  std::vector<int> all_units_;
  SupportPoints temporal_points_;
  DesignView occupancy_design_;
  DesignView detection_design_;

  std::vector<double> ls_grid_;
  std::vector<Covariance> ls_cov_;
  std::vector<Eigen::MatrixXd> ls_inverse_;

  TemporalKernel kt_cache_;
  double temporal_scale_ = 0.5;
  Eigen::Matrix2d proposal_chol_;
  long window_accepts_ = 0;
  long window_count_ = 0;
  std::vector<Eigen::Vector2d> log_samples_;
  long temporal_accepted_ = 0;
  long temporal_proposed_ = 0;
  long temporal_nonfinite_ = 0;
  long spatial_underflow_ = 0;
  double max_relative_jitter_ = 0.0;
};

inline const std::vector<std::string>& scalar_parameter_names() {
  static const std::vector<std::string> names = {"mu_psi", "sigma_t", "l_t",     "sigma_s",
                                                 "l_s",    "sigma_eps", "mu_p", "sigma_p"};
  return names;
}

// Runs burn-in plus `iterations` sampling iterations and records every
// `thin`-th post burn-in state with its derived quantities. Identical inputs
// and seed give bit-identical output for any thread count.
inline ChainOutput run_chain(const Dataset& ds, const Priors& priors, const SamplerOptions& options,
                             const McmcConfig& mcmc) {
  if (mcmc.iterations < 0 || mcmc.burnin < 0 || mcmc.thin < 1) {
    throw Error(ErrorKind::InvalidParameter, "mcmc: iterations and burnin must be >= 0 and thin >= 1");
  }
  const auto t0 = std::chrono::steady_clock::now();
  OccupancyModel model(ds, priors, options, mcmc.seed);
  model.set_adaptation(mcmc.burnin);
  Rng rng(mcmc.seed);
  ModelState st = model.initial_state(rng);

  const int Y = ds.num_years();
  const int S = ds.num_sites();
  const int M = model.num_cells();
  const long n_draws = mcmc.iterations / mcmc.thin;

  ChainOutput out;
  out.years = ds.years;
  out.site_cell = model.grid().assignment;
  for (const auto& s : ds.occupancy_scales) out.occupancy_names.push_back(s.name);
  for (const auto& s : ds.detection_scales) out.detection_names.push_back(s.name);
  out.scalar_names = scalar_parameter_names();
  out.scalars.resize(n_draws, static_cast<Eigen::Index>(out.scalar_names.size()));
  out.b.resize(n_draws, Y);
  out.u.resize(n_draws, Y);
  out.beta_psi.resize(n_draws, ds.occupancy_x.cols());
  out.beta_p.resize(n_draws, ds.detection_x.cols());
  out.a_tilde.resize(n_draws, options.spatial ? M : 0);
  out.eps.resize(n_draws, S);
  out.index.resize(n_draws, Y);
  out.detection_trend.resize(n_draws, Y);
  for (int d = 1; d <= 366; d += std::max(1, options.season_step)) out.season_days.push_back(d);
  out.season.resize(n_draws, static_cast<Eigen::Index>(out.season_days.size()));
  out.season_year_index = options.season_year_index >= 0 && options.season_year_index < Y ? options.season_year_index : Y - 1;
  out.gof_year.resize(n_draws, Y);
  out.gof_region.resize(n_draws, M);
  {
    const GofStatistics obs = detection_totals(ds, out.site_cell, M, ds.y);
    out.observed_year = obs.per_year;
    out.observed_region = obs.per_region;
  }

  // standardised julian-day powers for the seasonal curve
  Eigen::MatrixXd season_x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.season_days.size()), ds.detection_x.cols());
  for (std::size_t c = 0; c < ds.detection_scales.size(); ++c) {
    const auto& sc = ds.detection_scales[c];
    int power = 0;
    if (sc.name == "julian_day") power = 1;
    if (sc.name.rfind("julian_day^", 0) == 0) power = std::stoi(sc.name.substr(11));
    if (power == 0) continue;
    for (std::size_t r = 0; r < out.season_days.size(); ++r) {
      season_x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          sc.apply(std::pow(static_cast<double>(out.season_days[r]), power));
    }
  }

  const OccupancySurface surface(ds, out.site_cell);
  const auto t_start = std::chrono::steady_clock::now();
  const long total = mcmc.burnin + mcmc.iterations;
  long recorded = 0;
  for (long it = 0; it < total; ++it) {
    model.set_iteration(it);
    try {
      model.step(st, rng);
    } catch (const Error& e) {
      throw Error(e.kind(), "iteration " + std::to_string(it) + ": " + e.what());
    }
    if (it < mcmc.burnin || (it - mcmc.burnin + 1) % mcmc.thin != 0 || recorded >= n_draws) continue;

    const long d = recorded++;
    out.scalars.row(d) << st.mu_psi, st.sigma_t, st.l_t, st.sigma_s, st.l_s, st.sigma_eps, st.mu_p, st.sigma_p;
    out.b.row(d) = st.b.transpose();
    out.u.row(d) = st.u.transpose();
    out.beta_psi.row(d) = st.beta_psi.transpose();
    out.beta_p.row(d) = st.beta_p.transpose();
    if (options.spatial) out.a_tilde.row(d) = st.a_tilde.transpose();
    out.eps.row(d) = st.eps.transpose();
    out.index.row(d) = surface.index(st).transpose();
    for (int t = 0; t < Y; ++t) out.detection_trend(d, t) = logistic(st.u(t));
    const Eigen::VectorXd season_eta = season_x * st.beta_p;
    for (Eigen::Index r = 0; r < season_eta.size(); ++r) {
      out.season(d, r) = logistic(st.u(out.season_year_index) + season_eta(r));
    }
    Rng gof_rng = make_substream(mcmc.seed, static_cast<std::uint64_t>(it), kTagGof, 0);
    const GofStatistics rep = gof_replicates(ds, out.site_cell, M, st, gof_rng);
    out.gof_year.row(d) = rep.per_year.transpose();
    out.gof_region.row(d) = rep.per_region.transpose();
  }
  const auto t_end = std::chrono::steady_clock::now();

  auto& meta = out.meta;
  meta.seed = mcmc.seed;
  meta.iterations = mcmc.iterations;
  meta.burnin = mcmc.burnin;
  meta.thin = mcmc.thin;
  meta.threads = options.threads;
  meta.spatial = options.spatial;
  meta.year_detection = options.year_detection;
  meta.grid_step = options.grid_step;
  meta.ls_grid = model.ls_grid();
  meta.priors = model.priors();
  meta.num_obs = ds.num_obs();
  meta.num_units = ds.num_units();
  meta.num_sites = S;
  meta.num_years = Y;
  meta.num_cells = M;
  meta.temporal_acceptance = model.temporal_proposed() > 0
                                 ? static_cast<double>(model.temporal_accepted()) / model.temporal_proposed()
                                 : 0.0;
  meta.temporal_proposal_scale = model.temporal_scale();
  meta.temporal_rejected_nonfinite = model.temporal_rejected_nonfinite();
  meta.spatial_weight_underflow = model.spatial_underflow();
  meta.max_relative_jitter = model.max_relative_jitter();
  meta.seconds_total = std::chrono::duration<double>(t_end - t0).count();
  meta.seconds_per_iteration = total > 0 ? std::chrono::duration<double>(t_end - t_start).count() / total : 0.0;
  return out;
}

}  // namespace fastocc

#endif  // FASTOCC_SAMPLER_HPP
