#ifndef FASTOCC_DESIGN_HPP
#define FASTOCC_DESIGN_HPP

// Cross-products X^T Omega X and X^T k for designs of the form
//   X = (1, D, F_1, ..., F_q)
// where D is a dense covariate block and each F_f is the one-hot indicator
// matrix of a categorical factor (year, grid cell). Indicator columns are
// never materialised: every block is a sum of Omega_ii over the rows that hit
// the corresponding (level, level) or (level, covariate) pair, e.g.
//   (F_f^T Omega F_f)_{ll}    = sum_{i: f(i) = l} w_i
//   (F_f^T Omega F_g)_{l m}   = sum_{i: f(i) = l, g(i) = m} w_i
//   (F_f^T Omega D)_{l c}     = sum_{i: f(i) = l} w_i D_ic
// so a pass costs O(n p^2) with p the dense width, independent of the number
// of levels.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fastocc/error.hpp"

namespace fastocc {

struct Factor {
  std::span<const int> level;  // level of each row, 0-based
  int levels = 0;
};

struct DesignView {
  bool intercept = true;
  const Eigen::MatrixXd* dense = nullptr;  // rows x p, may be null
  std::vector<Factor> factors;
  int rows = 0;

  int dense_cols() const { return dense ? static_cast<int>(dense->cols()) : 0; }

  int num_columns() const {
    int n = (intercept ? 1 : 0) + dense_cols();
    for (const auto& f : factors) n += f.levels;
    return n;
  }

  int factor_offset(std::size_t f) const {
    int off = (intercept ? 1 : 0) + dense_cols();
    for (std::size_t g = 0; g < f; ++g) off += factors[g].levels;
    return off;
  }
};

struct CrossProducts {
  // X^T Omega X blocks
  double int_int = 0.0;
  Eigen::VectorXd int_dense;
  std::vector<Eigen::VectorXd> int_factor;
  Eigen::MatrixXd dense_dense;
  std::vector<Eigen::MatrixXd> dense_factor;  // p x L_f
  std::vector<Eigen::VectorXd> factor_diag;   // L_f
  std::vector<Eigen::MatrixXd> factor_pair;   // L_f x L_g for f < g, row-major pair order
  // X^T k blocks
  double k_int = 0.0;
  Eigen::VectorXd k_dense;
  std::vector<Eigen::VectorXd> k_factor;

  static CrossProducts zeros(const DesignView& d) {
    CrossProducts cp;
    const int p = d.dense_cols();
    cp.int_dense = Eigen::VectorXd::Zero(p);
    cp.dense_dense = Eigen::MatrixXd::Zero(p, p);
    cp.k_dense = Eigen::VectorXd::Zero(p);
    for (std::size_t f = 0; f < d.factors.size(); ++f) {
      const int lf = d.factors[f].levels;
      cp.int_factor.push_back(Eigen::VectorXd::Zero(lf));
      cp.dense_factor.push_back(Eigen::MatrixXd::Zero(p, lf));
      cp.factor_diag.push_back(Eigen::VectorXd::Zero(lf));
      cp.k_factor.push_back(Eigen::VectorXd::Zero(lf));
      for (std::size_t g = f + 1; g < d.factors.size(); ++g) {
        cp.factor_pair.push_back(Eigen::MatrixXd::Zero(lf, d.factors[g].levels));
      }
    }
    return cp;
  }

  CrossProducts& operator+=(const CrossProducts& o) {
    int_int += o.int_int;
    int_dense += o.int_dense;
    dense_dense += o.dense_dense;
    k_int += o.k_int;
    k_dense += o.k_dense;
    for (std::size_t f = 0; f < int_factor.size(); ++f) {
      int_factor[f] += o.int_factor[f];
      dense_factor[f] += o.dense_factor[f];
      factor_diag[f] += o.factor_diag[f];
      k_factor[f] += o.k_factor[f];
    }
    for (std::size_t q = 0; q < factor_pair.size(); ++q) factor_pair[q] += o.factor_pair[q];
    return *this;
  }

  // Full symmetric X^T Omega X in column order (intercept, dense, factors...).
  Eigen::MatrixXd xtwx(const DesignView& d) const {
    const int n = d.num_columns();
    const int p = d.dense_cols();
    const int i0 = d.intercept ? 1 : 0;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    if (d.intercept) {
      m(0, 0) = int_int;
      for (int c = 0; c < p; ++c) m(0, i0 + c) = m(i0 + c, 0) = int_dense(c);
    }
    m.block(i0, i0, p, p) = dense_dense;
    std::size_t pair = 0;
    for (std::size_t f = 0; f < d.factors.size(); ++f) {
      const int off = d.factor_offset(f);
      const int lf = d.factors[f].levels;
      if (d.intercept) {
        m.block(0, off, 1, lf) = int_factor[f].transpose();
        m.block(off, 0, lf, 1) = int_factor[f];
      }
      m.block(i0, off, p, lf) = dense_factor[f];
      m.block(off, i0, lf, p) = dense_factor[f].transpose();
      m.block(off, off, lf, lf).diagonal() = factor_diag[f];
      for (std::size_t g = f + 1; g < d.factors.size(); ++g, ++pair) {
        const int og = d.factor_offset(g);
        m.block(off, og, lf, d.factors[g].levels) = factor_pair[pair];
        m.block(og, off, d.factors[g].levels, lf) = factor_pair[pair].transpose();
      }
    }
    return m;
  }

  Eigen::VectorXd xtk(const DesignView& d) const {
    Eigen::VectorXd v(d.num_columns());
    const int i0 = d.intercept ? 1 : 0;
    if (d.intercept) v(0) = k_int;
    v.segment(i0, d.dense_cols()) = k_dense;
    for (std::size_t f = 0; f < d.factors.size(); ++f) {
      v.segment(d.factor_offset(f), d.factors[f].levels) = k_factor[f];
    }
    return v;
  }
};

namespace detail {

inline void accumulate_rows(const DesignView& d, std::span<const int> rows, std::span<const double> omega,
                            std::span<const double> kvec, CrossProducts& cp) {
  const int p = d.dense_cols();
  const std::size_t nf = d.factors.size();
  for (int r : rows) {
    const auto ri = static_cast<std::size_t>(r);
    const double w = omega[ri];
    const double k = kvec[ri];
    cp.int_int += w;
    cp.k_int += k;
    for (int c = 0; c < p; ++c) {
      const double x = (*d.dense)(r, c);
      const double wx = w * x;
      cp.int_dense(c) += wx;
      cp.k_dense(c) += k * x;
      for (int c2 = 0; c2 <= c; ++c2) cp.dense_dense(c, c2) += wx * (*d.dense)(r, c2);
    }
    std::size_t pair = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      const int lf = d.factors[f].level[ri];
      cp.int_factor[f](lf) += w;
      cp.factor_diag[f](lf) += w;
      cp.k_factor[f](lf) += k;
      for (int c = 0; c < p; ++c) cp.dense_factor[f](c, lf) += w * (*d.dense)(r, c);
      for (std::size_t g = f + 1; g < nf; ++g, ++pair) {
        cp.factor_pair[pair](lf, d.factors[g].level[ri]) += w;
      }
    }
  }
}

}  // namespace detail

inline constexpr std::size_t kAccumulateChunk = 8192;

// Accumulates X^T Omega X and X^T k over the given row ids of the design.
// omega and kvec are indexed by row id. Partial sums are formed over
// fixed-size chunks and reduced in chunk order, so the result is identical for
// any thread count.
inline CrossProducts sparse_cross_products(const DesignView& d, std::span<const int> rows,
                                           std::span<const double> omega, std::span<const double> kvec,
                                           int threads = 1) {
  const std::size_t n_chunks = (rows.size() + kAccumulateChunk - 1) / kAccumulateChunk;
  if (n_chunks <= 1) {
    CrossProducts cp = CrossProducts::zeros(d);
    detail::accumulate_rows(d, rows, omega, kvec, cp);
    cp.dense_dense.triangularView<Eigen::StrictlyUpper>() = cp.dense_dense.transpose();
    return cp;
  }
  std::vector<CrossProducts> partial(n_chunks, CrossProducts::zeros(d));
#pragma omp parallel for schedule(static) num_threads(std::max(1, threads))
  for (long c = 0; c < static_cast<long>(n_chunks); ++c) {
    const std::size_t b = static_cast<std::size_t>(c) * kAccumulateChunk;
    const std::size_t e = std::min(rows.size(), b + kAccumulateChunk);
    detail::accumulate_rows(d, rows.subspan(b, e - b), omega, kvec, partial[static_cast<std::size_t>(c)]);
  }
  CrossProducts cp = std::move(partial[0]);
  for (std::size_t c = 1; c < n_chunks; ++c) cp += partial[c];
  cp.dense_dense.triangularView<Eigen::StrictlyUpper>() = cp.dense_dense.transpose();
  return cp;
}

inline std::vector<int> all_rows(int n) {
  std::vector<int> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

// Cross-products over every row of the design.
inline CrossProducts sparse_cross_products(const DesignView& d, std::span<const double> omega,
                                           std::span<const double> kvec, int threads = 1) {
  const auto rows = all_rows(d.rows);
  return sparse_cross_products(d, rows, omega, kvec, threads);
}

// Explicit dense design matrix; used by the debug equivalence check.
inline Eigen::MatrixXd dense_design(const DesignView& d) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(d.rows, d.num_columns());
  const int i0 = d.intercept ? 1 : 0;
  for (int r = 0; r < d.rows; ++r) {
    if (d.intercept) x(r, 0) = 1.0;
    for (int c = 0; c < d.dense_cols(); ++c) x(r, i0 + c) = (*d.dense)(r, c);
    for (std::size_t f = 0; f < d.factors.size(); ++f) {
      x(r, d.factor_offset(f) + d.factors[f].level[static_cast<std::size_t>(r)]) = 1.0;
    }
  }
  return x;
}

}  // namespace fastocc

#endif  // FASTOCC_DESIGN_HPP
