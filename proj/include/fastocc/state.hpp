#ifndef FASTOCC_STATE_HPP
#define FASTOCC_STATE_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <vector>

namespace fastocc {

// Hyperprior values. Inverse-gamma pairs (shape, scale) act on variances;
// gamma pairs (shape, rate) act on a length scale divided by its reference
// scale (0 = derive the reference scale from the data extent).
struct Priors {
  double mu0_psi = 0.0;
  double sigma0_psi = 2.0;
  double mu0_p = 0.0;
  double sigma0_p = 2.0;
  double phi_psi = 4.0;
  double phi_p = 4.0;
  double a_sigma_t = 2.0, b_sigma_t = 1.0;
  double a_sigma_s = 2.0, b_sigma_s = 1.0;
  double a_eps = 2.0, b_eps = 1.0;
  double a_sigma_p = 2.0, b_sigma_p = 1.0;
  double a_lt = 2.0, b_lt = 1.0;
  double a_ls = 2.0, b_ls = 1.0;
  double scale_lt = 0.0;
  double scale_ls = 0.0;
};

// One full parameter vector of the chain.
struct ModelState {
  double mu_psi = 0.0;
  Eigen::VectorXd beta_psi;  // occupancy covariates
  Eigen::VectorXd b;         // year effects (Y)
  Eigen::VectorXd a_tilde;   // grid-cell spatial effects (M)
  Eigen::VectorXd eps;       // site effects (S)
  Eigen::VectorXd u;         // detection year intercepts (Y)
  Eigen::VectorXd beta_p;    // detection covariates
  std::vector<std::uint8_t> z;  // latent occupancy per unit (J)
  Eigen::VectorXd omega_psi;    // J
  Eigen::VectorXd omega_p;      // N; refreshed only for rows of occupied units

  double sigma_t = 1.0;
  double l_t = 1.0;
  double sigma_s = 1.0;
  double l_s = 1.0;
  int ls_index = 0;
  double sigma_eps = 1.0;
  double mu_p = 0.0;
  double sigma_p = 1.0;
};

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 - logistic(x)) = -log(1 + e^x)
inline double log1m_logistic(double x) {
  if (x > 0.0) return -x - std::log1p(std::exp(-x));
  return -std::log1p(std::exp(x));
}

}  // namespace fastocc

#endif  // FASTOCC_STATE_HPP
