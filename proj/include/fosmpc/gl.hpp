#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fosmpc {

// psi(alpha, j) = (-1)^j * binomial(alpha, j), computed by the multiplicative
// recursion psi(alpha, j) = psi(alpha, j-1) * (j - 1 - alpha) / j. The
// recursion avoids factorial overflow and is stable for lags in the
// thousands. Accepts any finite alpha (alpha = 0 gives [1, 0, 0, ...], which
// the identification code uses to disable differencing).
inline std::vector<double> gl_psi(double alpha, int max_lag) {
  if (!std::isfinite(alpha)) throw std::invalid_argument("gl_psi: alpha must be finite");
  if (max_lag < 0) throw std::invalid_argument("gl_psi: max_lag must be >= 0");
  std::vector<double> psi(static_cast<std::size_t>(max_lag) + 1);
  psi[0] = 1.0;
  for (int j = 1; j <= max_lag; ++j)
    psi[j] = psi[j - 1] * (static_cast<double>(j) - 1.0 - alpha) / static_cast<double>(j);
  return psi;
}

// Per-channel table of fractional-difference weights, row i = channel i.
struct GlCoefficients {
  Eigen::MatrixXd psi;  // n x (max_lag + 1)
  int max_lag = 0;

  double operator()(Eigen::Index channel, int lag) const { return psi(channel, lag); }
  Eigen::Index channels() const { return psi.rows(); }
};

inline GlCoefficients gl_coefficients(const Eigen::VectorXd& alpha, int max_lag) {
  if (max_lag < 0) throw std::invalid_argument("gl_coefficients: max_lag must be >= 0");
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (!std::isfinite(alpha[i]) || alpha[i] <= 0.0)
      throw std::invalid_argument("gl_coefficients: alpha entries must be finite and positive");
  }
  GlCoefficients table;
  table.max_lag = max_lag;
  table.psi.resize(alpha.size(), max_lag + 1);
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    const std::vector<double> row = gl_psi(alpha[i], max_lag);
    for (int j = 0; j <= max_lag; ++j) table.psi(i, j) = row[static_cast<std::size_t>(j)];
  }
  return table;
}

}  // namespace fosmpc
