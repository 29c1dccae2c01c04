#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <vector>

#include "fosmpc/errors.hpp"
#include "fosmpc/gl.hpp"
#include "fosmpc/model.hpp"

namespace fosmpc {

// Per-channel scaling onto [-1, 1] by the max absolute value; all-zero
// channels get scale 1 and pass through unchanged.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> normalize(const Eigen::MatrixXd& data) {
  Eigen::VectorXd scales(data.cols());
  Eigen::MatrixXd out(data.rows(), data.cols());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double s = data.col(c).cwiseAbs().maxCoeff();
    scales[c] = s > 0.0 ? s : 1.0;
    out.col(c) = data.col(c) / scales[c];
  }
  return {out, scales};
}

inline Eigen::MatrixXd denormalize(const Eigen::MatrixXd& data, const Eigen::VectorXd& scales) {
  Eigen::MatrixXd out(data.rows(), data.cols());
  for (Eigen::Index c = 0; c < data.cols(); ++c) out.col(c) = data.col(c) * scales[c];
  return out;
}

struct CouplingFit {
  Eigen::MatrixXd A;                // n x n, row i regresses channel i
  Eigen::VectorXd rss_per_channel;  // squared one-step residuals
  Eigen::MatrixXd gram;             // X^T X of the raw-state regressor
  Eigen::Index samples = 0;         // regression rows (T - 1)
};

namespace detail {

inline Eigen::LDLT<Eigen::MatrixXd> checked_gram_ldlt(const Eigen::MatrixXd& gram) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double max_eig = es.eigenvalues().maxCoeff();
  if (!(max_eig > 0.0) || es.eigenvalues().minCoeff() < 1e-12 * max_eig)
    throw DataError("identify: rank-deficient regression (degenerate data)");
  return gram.ldlt();
}

// Fractionally differenced target for one channel at the candidate exponent,
// folded directly into the sufficient statistics y^T y and X^T y.
struct ChannelStats {
  double yy = 0.0;
  Eigen::VectorXd xty;
};

inline ChannelStats channel_stats(const Eigen::MatrixXd& data, Eigen::Index channel,
                                  double alpha, int lag_cap) {
  const Eigen::Index T = data.rows();
  const Eigen::Index K = T - 1;
  const std::vector<double> psi = gl_psi(alpha, lag_cap);
  const auto x = data.col(channel);

  // y_k = sum_{j <= min(k+1, lag_cap)} psi_j x_{k+1-j}, accumulated lag by lag
  // so each lag is one vectorized axpy over the sample axis
  Eigen::VectorXd y = x.segment(1, K);  // psi_0 = 1
  for (Eigen::Index j = 1; j <= std::min<Eigen::Index>(lag_cap, K); ++j)
    y.segment(j - 1, K - j + 1) += psi[static_cast<std::size_t>(j)] * x.head(K - j + 1);

  ChannelStats st;
  st.yy = y.squaredNorm();
  st.xty = data.topRows(K).transpose() * y;
  return st;
}

}  // namespace detail

// Ordinary least squares fit of the coupling rows on the raw states, with the
// target fractionally differenced at a fixed exponent vector. alpha = 0
// disables differencing for that channel (the target is x_{k+1} itself).
inline CouplingFit fit_coupling_given_alpha(const Eigen::MatrixXd& data,
                                            const Eigen::VectorXd& alpha, int lag_cap) {
  const Eigen::Index T = data.rows();
  const Eigen::Index n = data.cols();
  if (alpha.size() != n) throw std::invalid_argument("fit_coupling_given_alpha: alpha size");
  if (T < 2) throw std::invalid_argument("fit_coupling_given_alpha: need at least 2 samples");

  CouplingFit fit;
  fit.samples = T - 1;
  const Eigen::MatrixXd X = data.topRows(T - 1);
  fit.gram = X.transpose() * X;
  const auto ldlt = detail::checked_gram_ldlt(fit.gram);

  fit.A.resize(n, n);
  fit.rss_per_channel.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const detail::ChannelStats st = detail::channel_stats(data, i, alpha[i], lag_cap);
    const Eigen::VectorXd coef = ldlt.solve(st.xty);
    fit.A.row(i) = coef.transpose();
    fit.rss_per_channel[i] = std::max(st.yy - st.xty.dot(coef), 0.0);
  }
  return fit;
}

struct AlphaGrid {
  double lo = 0.1;
  double hi = 1.5;
  double step = 0.01;
};

struct IdentificationResult {
  FosModel model;
  double residual_rss = 0.0;
  double alpha_grid_step = 0.0;
  int passes = 0;  // coordinate-descent passes actually run
};

// Two-stage estimator: per channel, grid-search the exponent while re-fitting
// the coupling row by OLS at every candidate, keeping the candidate with the
// smallest one-step squared prediction residual; repeated for up to `passes`
// sweeps (stopping early once no exponent moves). The noise variance is the
// mean squared residual of the final fit.
inline IdentificationResult identify(const Eigen::MatrixXd& data, int p_fit = 512,
                                     const AlphaGrid& grid = AlphaGrid{}, int passes = 3) {
  const Eigen::Index T = data.rows();
  const Eigen::Index n = data.cols();
  if (n < 1 || T < 2) throw std::invalid_argument("identify: data must be T x n, T >= 2");
  if (p_fit < 1) throw std::invalid_argument("identify: p_fit must be >= 1");
  if (T < 10 * n * p_fit)
    throw std::invalid_argument("identify: need T >= 10 * n * p_fit samples");
  if (!data.allFinite()) throw std::invalid_argument("identify: data must be finite");
  if (!(grid.step > 0.0) || !(grid.lo > 0.0) || grid.hi > 2.0 || grid.lo > grid.hi)
    throw std::invalid_argument("identify: alpha grid must lie in (0, 2] with positive step");
  if (passes < 1) throw std::invalid_argument("identify: passes must be >= 1");

  const int lag_cap = static_cast<int>(std::min<Eigen::Index>(p_fit, T - 1));
  const Eigen::Index K = T - 1;
  const Eigen::MatrixXd X = data.topRows(K);
  const Eigen::MatrixXd gram = X.transpose() * X;
  const auto ldlt = detail::checked_gram_ldlt(gram);

  std::vector<double> candidates;
  for (double a = grid.lo; a <= grid.hi + 0.5 * grid.step; a += grid.step)
    candidates.push_back(std::min(a, grid.hi));

  // channels decouple given the shared raw-state regressor, so the grid
  // searches run in parallel and merge by channel index
  const auto scan_channel = [&](Eigen::Index i) {
    double best_alpha = candidates.front();
    double best_rss = std::numeric_limits<double>::infinity();
    for (double a : candidates) {
      const detail::ChannelStats st = detail::channel_stats(data, i, a, lag_cap);
      const double rss = std::max(st.yy - st.xty.dot(ldlt.solve(st.xty)), 0.0);
      if (rss < best_rss) {
        best_rss = rss;
        best_alpha = a;
      }
    }
    return std::make_pair(best_alpha, best_rss);
  };

  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(n, candidates.front());
  int passes_run = 0;
  for (int pass = 0; pass < passes; ++pass) {
    ++passes_run;
    Eigen::VectorXd next(n);
    std::vector<std::future<std::pair<double, double>>> jobs;
    jobs.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      jobs.push_back(std::async(std::launch::async, scan_channel, i));
    for (Eigen::Index i = 0; i < n; ++i) next[i] = jobs[static_cast<std::size_t>(i)].get().first;
    const bool stable = pass > 0 && (next - alpha).cwiseAbs().maxCoeff() == 0.0;
    alpha = next;
    if (stable) break;
  }

  const CouplingFit fit = fit_coupling_given_alpha(data, alpha, lag_cap);
  IdentificationResult result;
  result.residual_rss = fit.rss_per_channel.sum();
  result.alpha_grid_step = grid.step;
  result.passes = passes_run;
  const double sigma2 = result.residual_rss / static_cast<double>(n * K);
  result.model = FosModel(fit.A, alpha, sigma2);
  return result;
}

}  // namespace fosmpc
