#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace fosmpc {

// Time-indexed record of one simulation run. Row k of each array belongs to
// time t = k * dt: states row k is x_k, inputs row k is u_k, disturbances row
// k is d_k. Events are (step, label) markers such as burst starts, detector
// triggers, or solver warnings.
struct SimulationTrace {
  double dt = 1.0 / 160.0;
  Eigen::MatrixXd states;        // T x n
  Eigen::MatrixXd inputs;        // T x n_u
  Eigen::MatrixXd disturbances;  // T x n
  std::vector<std::pair<Eigen::Index, std::string>> events;

  Eigen::Index steps() const { return states.rows(); }
  Eigen::Index channels() const { return states.cols(); }
};

}  // namespace fosmpc
