#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "fosmpc/model.hpp"

namespace fosmpc {

// Block-companion realization of an MVAR(p) model: stacking p consecutive
// states turns the finite-memory recursion into a first-order LTI system.
//
//   A_tilde = [ A_0 ... A_{p-1} ]   B_tilde = [ B ]   Bw_tilde = [ I ]
//             [  I  ...    0   ]             [ 0 ]              [ 0 ]
//             [      ...       ]             [...]              [...]
struct AugmentedLti {
  Eigen::MatrixXd A_tilde;   // (n p) x (n p)
  Eigen::MatrixXd B_tilde;   // (n p) x n_u
  Eigen::MatrixXd Bw_tilde;  // (n p) x n
  Eigen::Index n = 0, n_u = 0;
  int p = 1;
};

inline AugmentedLti augment(const MvarModel& mvar, const Eigen::MatrixXd& B) {
  const Eigen::Index n = mvar.n();
  const int p = mvar.p();
  if (p < 1) throw std::invalid_argument("augment: p must be >= 1");
  if (B.rows() != n) throw std::invalid_argument("augment: B must have n rows");
  for (const auto& lag : mvar.lag_matrices)
    if (lag.rows() != n || lag.cols() != n)
      throw std::invalid_argument("augment: lag matrices must be n x n");

  AugmentedLti aug;
  aug.n = n;
  aug.n_u = B.cols();
  aug.p = p;
  aug.A_tilde = Eigen::MatrixXd::Zero(n * p, n * p);
  for (int j = 0; j < p; ++j)
    aug.A_tilde.block(0, n * j, n, n) = mvar.lag_matrices[static_cast<std::size_t>(j)];
  for (int j = 1; j < p; ++j)
    aug.A_tilde.block(n * j, n * (j - 1), n, n) = Eigen::MatrixXd::Identity(n, n);
  aug.B_tilde = Eigen::MatrixXd::Zero(n * p, B.cols());
  aug.B_tilde.topRows(n) = B;
  aug.Bw_tilde = Eigen::MatrixXd::Zero(n * p, n);
  aug.Bw_tilde.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  return aug;
}

// Stacks the augmented state [x_k; x_{k-1}; ...; x_{k-p+1}] from a state
// history (row k = x_k, newest last); missing history is zero-padded.
inline Eigen::VectorXd stack_augmented_state(const Eigen::MatrixXd& history, int p) {
  const Eigen::Index n = history.cols();
  const Eigen::Index rows = history.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n * p);
  for (int j = 0; j < p; ++j) {
    const Eigen::Index k = rows - 1 - j;
    if (k >= 0) x.segment(n * j, n) = history.row(k).transpose();
  }
  return x;
}

// Condensed maps from augmented initial state and stacked inputs to the
// predicted channel states over steps 1..P (noise at its zero mean):
//   X = Phi x_aug + Gamma U,  X = [x_{k+1}; ...; x_{k+P}].
struct PredictionMatrices {
  Eigen::MatrixXd Phi;    // (n P) x (n p)
  Eigen::MatrixXd Gamma;  // (n P) x (n_u P)
  int horizon = 0;
};

// Time-varying form: step_models[j] holds the system applied at prediction
// step j. Accepts a single entry reused across the horizon.
inline PredictionMatrices prediction_matrices(const std::vector<AugmentedLti>& step_models,
                                              int P) {
  if (P < 1) throw std::invalid_argument("prediction_matrices: P must be >= 1");
  if (step_models.empty()) throw std::invalid_argument("prediction_matrices: no system given");
  const bool varying = step_models.size() > 1;
  if (varying && step_models.size() < static_cast<std::size_t>(P))
    throw std::invalid_argument("prediction_matrices: need one system per step");
  const AugmentedLti& first = step_models.front();
  const Eigen::Index n = first.n, n_u = first.n_u, np = first.A_tilde.rows();

  PredictionMatrices pred;
  pred.horizon = P;
  pred.Phi.resize(n * P, np);
  pred.Gamma = Eigen::MatrixXd::Zero(n * P, n_u * P);

  // running products: free maps the initial augmented state to x~_{k+j},
  // forced[m] maps u_{k+m} to x~_{k+j}
  Eigen::MatrixXd free = Eigen::MatrixXd::Identity(np, np);
  std::vector<Eigen::MatrixXd> forced;
  forced.reserve(static_cast<std::size_t>(P));
  for (int j = 1; j <= P; ++j) {
    const AugmentedLti& sys = varying ? step_models[static_cast<std::size_t>(j - 1)] : first;
    free = sys.A_tilde * free;
    for (auto& f : forced) f = sys.A_tilde * f;
    forced.push_back(sys.B_tilde);
    pred.Phi.middleRows(n * (j - 1), n) = free.topRows(n);
    for (int m = 0; m < j; ++m)
      pred.Gamma.block(n * (j - 1), n_u * m, n, n_u) =
          forced[static_cast<std::size_t>(m)].topRows(n);
  }
  return pred;
}

inline PredictionMatrices prediction_matrices(const AugmentedLti& aug, int P) {
  return prediction_matrices(std::vector<AugmentedLti>{aug}, P);
}

}  // namespace fosmpc
