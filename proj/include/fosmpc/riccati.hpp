#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "fosmpc/augment.hpp"
#include "fosmpc/mpc.hpp"

namespace fosmpc {

// Finite-horizon LQR feedback u_k = K_k x~_k over the augmented system with
// the quadratic cost restricted to the channel states (first n entries).
struct RiccatiSolution {
  std::vector<Eigen::MatrixXd> gains;       // K_0 .. K_{N-1}, n_u x (n p)
  std::vector<Eigen::MatrixXd> cost_to_go;  // P_0 .. P_N
};

// Backward recursion with W = Q + P_{k+1}:
//   K_k = -(R + B^T W B)^{-1} B^T W A,   P_k = A^T W (A + B K_k).
// Serves as the unconstrained oracle for the box-constrained MPC.
inline RiccatiSolution riccati_lqr(const AugmentedLti& aug, const MpcConfig& cfg, int N) {
  if (N < 1) throw std::invalid_argument("riccati_lqr: N must be >= 1");
  cfg.validate();
  const Eigen::Index np = aug.A_tilde.rows();
  const Eigen::Index n = aug.n, n_u = aug.n_u;

  Eigen::MatrixXd q_tilde = Eigen::MatrixXd::Zero(np, np);
  q_tilde.topLeftCorner(n, n) = cfg.q_weight * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd r = cfg.r_weight * Eigen::MatrixXd::Identity(n_u, n_u);

  RiccatiSolution sol;
  sol.gains.assign(static_cast<std::size_t>(N), Eigen::MatrixXd());
  sol.cost_to_go.assign(static_cast<std::size_t>(N) + 1, Eigen::MatrixXd());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(np, np);
  sol.cost_to_go[static_cast<std::size_t>(N)] = p;
  for (int k = N - 1; k >= 0; --k) {
    const Eigen::MatrixXd w = q_tilde + p;
    const Eigen::MatrixXd btw = aug.B_tilde.transpose() * w;
    const Eigen::MatrixXd s = r + btw * aug.B_tilde;
    const Eigen::MatrixXd gain = -s.ldlt().solve(btw * aug.A_tilde);
    p = aug.A_tilde.transpose() * w * (aug.A_tilde + aug.B_tilde * gain);
    p = 0.5 * (p + p.transpose());
    sol.gains[static_cast<std::size_t>(k)] = gain;
    sol.cost_to_go[static_cast<std::size_t>(k)] = p;
  }
  return sol;
}

}  // namespace fosmpc
