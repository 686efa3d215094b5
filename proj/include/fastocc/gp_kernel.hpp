#ifndef FASTOCC_GP_KERNEL_HPP
#define FASTOCC_GP_KERNEL_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fastocc/error.hpp"

namespace fastocc {

struct KernelParams {
  double l = 1.0;
  double sigma = 1.0;
};

// Support points of a GP: one row per point, one column per coordinate
// (1 for years, 2 for site locations).
struct SupportPoints {
  Eigen::MatrixXd coords;

  SupportPoints() = default;
  explicit SupportPoints(Eigen::MatrixXd c) : coords(std::move(c)) {}

  static SupportPoints from_1d(const std::vector<double>& values) {
    Eigen::MatrixXd c(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) c(static_cast<Eigen::Index>(i), 0) = values[i];
    return SupportPoints(std::move(c));
  }

  Eigen::Index size() const { return coords.rows(); }
  Eigen::Index dim() const { return coords.cols(); }
};

// Relative diagonal nugget: starts at 1e-6 sigma^2 and escalates x10 up to 1e-2 sigma^2.
inline constexpr double kJitterStart = 1e-6;
inline constexpr double kJitterMax = 1e-2;

// A kernel matrix together with its Cholesky factor.
struct Covariance {
  Eigen::MatrixXd matrix;  // includes the jitter on the diagonal
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;  // absolute nugget that was added

  double log_det() const {
    const auto& l = llt.matrixLLT();
    double s = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
  }

  // x^T K^{-1} x
  double quad_inverse(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd v = llt.matrixL().solve(x);
    return v.squaredNorm();
  }

  Eigen::MatrixXd inverse() const {
    return llt.solve(Eigen::MatrixXd::Identity(matrix.rows(), matrix.cols()));
  }
};

inline void check_support(const SupportPoints& pts) {
  if (pts.size() == 0) throw Error(ErrorKind::InvalidInput, "gp: empty support point set");
  if (!pts.coords.allFinite()) throw Error(ErrorKind::InvalidInput, "gp: non-finite support point");
}

inline void check_kernel(const KernelParams& p) {
  if (!(p.l > 0.0) || !std::isfinite(p.l) || !(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
    throw Error(ErrorKind::InvalidParameter, "gp: kernel parameters must be positive and finite");
  }
}

// Squared-exponential kernel sigma^2 exp(-|xi_i - xi_j|^2 / l^2), no jitter.
inline Eigen::MatrixXd kernel_matrix(const KernelParams& params, const SupportPoints& pts) {
  check_kernel(params);
  check_support(pts);
  const Eigen::Index n = pts.size();
  const double s2 = params.sigma * params.sigma;
  const double inv_l2 = 1.0 / (params.l * params.l);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = s2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d2 = (pts.coords.row(i) - pts.coords.row(j)).squaredNorm();
      const double v = s2 * std::exp(-d2 * inv_l2);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

// Kernel matrix with the smallest relative nugget that admits a Cholesky factor.
inline Covariance build_covariance(const KernelParams& params, const SupportPoints& pts) {
  Eigen::MatrixXd base = kernel_matrix(params, pts);
  const double s2 = params.sigma * params.sigma;
  for (double rel = kJitterStart; rel <= kJitterMax * 1.0000001; rel *= 10.0) {
    Covariance cov;
    cov.jitter = rel * s2;
    cov.matrix = base;
    cov.matrix.diagonal().array() += cov.jitter;
    cov.llt.compute(cov.matrix);
    if (cov.llt.info() == Eigen::Success) return cov;
  }
  throw Error(ErrorKind::IllConditioned,
              "gp: covariance not positive definite after jitter escalation (l=" +
                  std::to_string(params.l) + ", sigma=" + std::to_string(params.sigma) + ")");
}

// Subset-of-Data grid: sites snapped to the centres of occupied squares of a
// uniform grid anchored at the bounding-box minimum.
struct SodGrid {
  double step = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  SupportPoints centers;             // M x 2
  std::vector<int> assignment;       // site -> centre index
  std::vector<std::pair<long, long>> cells;  // integer cell coordinates of each centre

  int num_centers() const { return static_cast<int>(centers.size()); }
};

inline SodGrid build_sod_grid(const SupportPoints& sites, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw Error(ErrorKind::InvalidParameter, "sod: grid step must be positive");
  }
  check_support(sites);
  if (sites.dim() != 2) throw Error(ErrorKind::InvalidInput, "sod: sites must be two-dimensional");

  SodGrid grid;
  grid.step = step;
  grid.origin_x = sites.coords.col(0).minCoeff();
  grid.origin_y = sites.coords.col(1).minCoeff();

  std::map<std::pair<long, long>, int> index;
  const Eigen::Index n = sites.size();
  grid.assignment.resize(static_cast<std::size_t>(n));
  std::vector<double> cx;
  std::vector<double> cy;
  for (Eigen::Index s = 0; s < n; ++s) {
    // floor puts points on a boundary into the higher-index square
    const long ix = static_cast<long>(std::floor((sites.coords(s, 0) - grid.origin_x) / step));
    const long iy = static_cast<long>(std::floor((sites.coords(s, 1) - grid.origin_y) / step));
    const auto key = std::make_pair(ix, iy);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, static_cast<int>(grid.cells.size())).first;
      grid.cells.push_back(key);
      cx.push_back(grid.origin_x + (static_cast<double>(ix) + 0.5) * step);
      cy.push_back(grid.origin_y + (static_cast<double>(iy) + 0.5) * step);
    }
    grid.assignment[static_cast<std::size_t>(s)] = it->second;
  }
  Eigen::MatrixXd c(static_cast<Eigen::Index>(cx.size()), 2);
  for (std::size_t m = 0; m < cx.size(); ++m) {
    c(static_cast<Eigen::Index>(m), 0) = cx[m];
    c(static_cast<Eigen::Index>(m), 1) = cy[m];
  }
  grid.centers = SupportPoints(std::move(c));
  return grid;
}

// Random-walk prior covariance: entry (s, t) = sigma1^2 + (min(s, t) - 1) sigmab^2, 1-based.
inline Eigen::MatrixXd rw_covariance(double sigma1, double sigmab, int T) {
  if (T < 1) throw Error(ErrorKind::InvalidParameter, "rw: T must be >= 1");
  Eigen::MatrixXd m(T, T);
  for (int s = 0; s < T; ++s) {
    for (int t = 0; t < T; ++t) {
      m(s, t) = sigma1 * sigma1 + static_cast<double>(std::min(s, t)) * sigmab * sigmab;
    }
  }
  return m;
}

struct PriorProfile {
  std::vector<double> variance;      // diagonal
  std::vector<double> lag1_corr;     // corr(b_t, b_{t+1}), t = 1..T-1
  bool stationary = false;
};

struct PriorComparison {
  PriorProfile gp;
  PriorProfile rw;
};

namespace detail {

inline PriorProfile profile_of(const Eigen::MatrixXd& cov, double tol) {
  PriorProfile p;
  const Eigen::Index n = cov.rows();
  for (Eigen::Index t = 0; t < n; ++t) p.variance.push_back(cov(t, t));
  for (Eigen::Index t = 0; t + 1 < n; ++t) {
    p.lag1_corr.push_back(cov(t, t + 1) / std::sqrt(cov(t, t) * cov(t + 1, t + 1)));
  }
  auto constant = [tol](const std::vector<double>& v) {
    for (double x : v) {
      if (std::abs(x - v.front()) > tol * std::max(1.0, std::abs(v.front()))) return false;
    }
    return true;
  };
  p.stationary = constant(p.variance) && constant(p.lag1_corr);
  return p;
}

}  // namespace detail

// Diagonal variances and lag-1 correlations of the GP and random-walk priors
// over T unit-spaced years.
inline PriorComparison prior_comparison_report(const KernelParams& gp, double sigma1, double sigmab,
                                               int T) {
  if (T < 3) throw Error(ErrorKind::InvalidParameter, "prior comparison needs T >= 3");
  std::vector<double> years(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) years[static_cast<std::size_t>(t)] = t;
  const Covariance k = build_covariance(gp, SupportPoints::from_1d(years));
  PriorComparison out;
  out.gp = detail::profile_of(k.matrix, 1e-12);
  out.rw = detail::profile_of(rw_covariance(sigma1, sigmab, T), 1e-12);
  return out;
}

}  // namespace fastocc

#endif  // FASTOCC_GP_KERNEL_HPP
