#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fosmpc/gl.hpp"

namespace fosmpc {

// Linear fractional-order system  Delta^alpha x_{k+1} = A x_k + w_k  with
// per-channel exponents alpha and AWGN of covariance sigma_w2 * I.
struct FosModel {
  Eigen::MatrixXd A;
  Eigen::VectorXd alpha;
  double sigma_w2 = 0.0;

  FosModel() = default;
  FosModel(Eigen::MatrixXd a, Eigen::VectorXd al, double s2)
      : A(std::move(a)), alpha(std::move(al)), sigma_w2(s2) {
    validate();
  }

  Eigen::Index n() const { return A.rows(); }

  void validate() const {
    if (A.rows() != A.cols()) throw std::invalid_argument("FosModel: A must be square");
    if (alpha.size() != A.rows())
      throw std::invalid_argument("FosModel: alpha must have one entry per channel");
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
      if (!std::isfinite(alpha[i]) || alpha[i] <= 0.0 || alpha[i] > 2.0)
        throw std::invalid_argument("FosModel: alpha entries must lie in (0, 2]");
    }
    if (!(sigma_w2 >= 0.0)) throw std::invalid_argument("FosModel: sigma_w2 must be >= 0");
  }
};

// Truncated MVAR form  x_{k+1} = sum_j A_j x_{k-j} + w_k  with p lag matrices.
struct MvarModel {
  std::vector<Eigen::MatrixXd> lag_matrices;
  double sigma_w2 = 0.0;

  Eigen::Index n() const { return lag_matrices.empty() ? 0 : lag_matrices.front().rows(); }
  int p() const { return static_cast<int>(lag_matrices.size()); }
};

// Expands the fractional difference into lag matrices: A_0 = A - D(1) and
// A_j = -D(j+1) for j >= 1, where D(j) = diag(psi(alpha_i, j)). Since
// D(1) = -diag(alpha), the first lag is A + diag(alpha).
inline MvarModel fos_to_mvar(const FosModel& model, int p) {
  if (p < 1) throw std::invalid_argument("fos_to_mvar: p must be >= 1");
  model.validate();
  const GlCoefficients gl = gl_coefficients(model.alpha, p);
  MvarModel mvar;
  mvar.sigma_w2 = model.sigma_w2;
  mvar.lag_matrices.reserve(static_cast<std::size_t>(p));
  Eigen::MatrixXd a0 = model.A;
  a0.diagonal() -= gl.psi.col(1);
  mvar.lag_matrices.push_back(a0);
  for (int j = 1; j < p; ++j) {
    Eigen::MatrixXd aj = Eigen::MatrixXd::Zero(model.n(), model.n());
    aj.diagonal() = -gl.psi.col(j + 1);
    mvar.lag_matrices.push_back(aj);
  }
  return mvar;
}

// Four-channel model identified from normalized ictal scalp-EEG recordings
// sampled at 160 Hz; ships with the toolkit so experiments run without
// external data.
inline FosModel builtin_ictal_model() {
  Eigen::MatrixXd A(4, 4);
  A << 0.0402, 0.0604, -0.0040, -0.0450,
       0.0340, -0.0571, 0.0742, 0.0701,
      -0.0119, -0.0032, -0.0105, 0.0078,
      -0.0335, 0.0165, -0.0009, 0.0453;
  Eigen::VectorXd alpha(4);
  alpha << 0.6606, 0.7973, 1.0670, 0.6977;
  return FosModel(std::move(A), std::move(alpha), 0.2);
}

// Quiet companion regime used for detector calibration and as a baseline for
// inter-ictal activity: same coupling and exponents, one tenth of the noise
// power, no disturbance bursts.
inline FosModel builtin_interictal_model() {
  FosModel m = builtin_ictal_model();
  m.sigma_w2 = 0.02;
  return m;
}

inline double builtin_sample_rate_hz() { return 160.0; }

// Uniform single-input actuation: the stimulus drives all channels equally.
inline Eigen::MatrixXd uniform_input_matrix(Eigen::Index n) {
  return Eigen::MatrixXd::Ones(n, 1);
}

}  // namespace fosmpc
