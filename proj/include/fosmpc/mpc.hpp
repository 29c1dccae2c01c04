#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fosmpc/augment.hpp"
#include "fosmpc/model.hpp"
#include "fosmpc/qp.hpp"
#include "fosmpc/simulate.hpp"
#include "fosmpc/trace.hpp"

namespace fosmpc {

struct MpcConfig {
  int p = 4;   // predictive-model memory (MVAR order)
  int P = 32;  // prediction horizon
  int M = 8;   // control horizon (inputs applied per plan)
  double q_weight = 10.0;
  double r_weight = 1.0;
  Eigen::VectorXd c;      // linear state cost, empty = zero
  Eigen::VectorXd u_min;  // empty = unbounded
  Eigen::VectorXd u_max;
  double solver_tol = 1e-8;
  int solver_max_iter = 20000;  // horizon QPs can be ill-conditioned; allow headroom

  void validate() const {
    if (p < 1) throw std::invalid_argument("MpcConfig: p must be >= 1");
    if (M < 1 || M > P) throw std::invalid_argument("MpcConfig: need 1 <= M <= P");
    if (q_weight < 0.0 || r_weight < 0.0)
      throw std::invalid_argument("MpcConfig: weights must be >= 0");
    if (u_min.size() != u_max.size())
      throw std::invalid_argument("MpcConfig: bound dimension mismatch");
    if (((u_max - u_min).array() < 0.0).any())
      throw std::invalid_argument("MpcConfig: u_min must be <= u_max");
  }
};

// Condensed quadratic program of the finite-horizon problem under certainty
// equivalence: with X = Phi x_aug + Gamma U and stage weights Q = q I (on the
// channel states), R = r I,
//   H = 2 (Gamma^T Qbar Gamma + Rbar),  g = 2 Gamma^T Qbar Phi x_aug + Gamma^T cbar.
// The zero-mean noise only adds an input-independent constant to the expected
// cost, so the QP does not depend on sigma_w2.
inline QpProblem build_qp(const PredictionMatrices& pred, const Eigen::VectorXd& x_aug,
                          const MpcConfig& cfg) {
  cfg.validate();
  const int P = pred.horizon;
  const Eigen::Index n = pred.Phi.rows() / P;
  const Eigen::Index n_u = pred.Gamma.cols() / P;
  if (pred.Phi.cols() != x_aug.size())
    throw std::invalid_argument("build_qp: augmented state dimension mismatch");
  if (cfg.c.size() != 0 && cfg.c.size() != n)
    throw std::invalid_argument("build_qp: c must have n entries");
  if (cfg.u_min.size() != 0 && cfg.u_min.size() != n_u)
    throw std::invalid_argument("build_qp: bounds must have n_u entries");

  QpProblem qp;
  qp.H = 2.0 * cfg.q_weight * (pred.Gamma.transpose() * pred.Gamma);
  qp.H.diagonal().array() += 2.0 * cfg.r_weight;
  qp.g = 2.0 * cfg.q_weight * (pred.Gamma.transpose() * (pred.Phi * x_aug));
  if (cfg.c.size() != 0) {
    Eigen::VectorXd c_bar(n * P);
    for (int j = 0; j < P; ++j) c_bar.segment(n * j, n) = cfg.c;
    qp.g += pred.Gamma.transpose() * c_bar;
  }
  const double inf = std::numeric_limits<double>::infinity();
  qp.lower = Eigen::VectorXd::Constant(n_u * P, -inf);
  qp.upper = Eigen::VectorXd::Constant(n_u * P, inf);
  if (cfg.u_min.size() != 0) {
    for (int j = 0; j < P; ++j) {
      qp.lower.segment(n_u * j, n_u) = cfg.u_min;
      qp.upper.segment(n_u * j, n_u) = cfg.u_max;
    }
  }
  return qp;
}

// Receding-horizon controller. The Hessian, bounds and the linear-term map
// depend only on the model and config, so they are assembled once; each plan
// only rebuilds g from the current augmented state and warm-starts the solver
// from the previous solution shifted by M steps.
class MpcController {
 public:
  MpcController(const MvarModel& mvar, const Eigen::MatrixXd& B, MpcConfig cfg)
      : cfg_(std::move(cfg)), aug_(augment(mvar, B)) {
    cfg_.validate();
    if (cfg_.p != mvar.p())
      throw std::invalid_argument("MpcController: cfg.p must match the model order");
    pred_ = prediction_matrices(aug_, cfg_.P);
    qp_template_ = build_qp(pred_, Eigen::VectorXd::Zero(aug_.A_tilde.rows()), cfg_);
    g_map_ = 2.0 * cfg_.q_weight * (pred_.Gamma.transpose() * pred_.Phi);
    g_const_ = qp_template_.g;  // the c-term, state independent
  }

  Eigen::Index n() const { return aug_.n; }
  Eigen::Index n_inputs() const { return aug_.n_u; }
  const MpcConfig& config() const { return cfg_; }

  struct Plan {
    Eigen::MatrixXd inputs;  // M x n_u, rows applied in order
    Eigen::VectorXd full_horizon;
    BoxQpResult report;
  };

  // history: row k = x_k, newest state last (zero-padded below p rows)
  Plan plan(const Eigen::MatrixXd& history) {
    if (history.rows() < 1) throw std::invalid_argument("MpcController: empty state history");
    if (history.cols() != aug_.n)
      throw std::invalid_argument("MpcController: history channel mismatch");
    const Eigen::VectorXd x_aug = stack_augmented_state(history, cfg_.p);
    QpProblem qp = qp_template_;
    qp.g = g_map_ * x_aug + g_const_;

    Plan out;
    out.report = solve_box_qp(qp, cfg_.solver_tol, cfg_.solver_max_iter,
                              warm_.size() ? &warm_ : nullptr);
    out.full_horizon = out.report.u;
    const Eigen::Index n_u = aug_.n_u;
    out.inputs.resize(cfg_.M, n_u);
    for (int m = 0; m < cfg_.M; ++m)
      out.inputs.row(m) = out.report.u.segment(n_u * m, n_u).transpose();

    // shift by M blocks for the next warm start, repeating the last block
    warm_.resize(out.report.u.size());
    const Eigen::Index shift = n_u * cfg_.M;
    const Eigen::Index rest = out.report.u.size() - shift;
    warm_.head(rest) = out.report.u.tail(rest);
    for (Eigen::Index i = rest; i < warm_.size(); i += n_u)
      warm_.segment(i, n_u) = out.report.u.tail(n_u);
    return out;
  }

  void reset_warm_start() { warm_.resize(0); }

 private:
  MpcConfig cfg_;
  AugmentedLti aug_;
  PredictionMatrices pred_;
  QpProblem qp_template_;
  Eigen::MatrixXd g_map_;
  Eigen::VectorXd g_const_;
  Eigen::VectorXd warm_;
};

// One receding-horizon step: builds the QP at the current augmented state and
// returns the first M input vectors (rows). A report pointer surfaces solver
// warnings.
inline Eigen::MatrixXd mpc_step(const Eigen::MatrixXd& state_history, const MpcConfig& cfg,
                                const MvarModel& mvar, const Eigen::MatrixXd& B,
                                BoxQpResult* report = nullptr) {
  MpcController controller(mvar, B, cfg);
  MpcController::Plan plan = controller.plan(state_history);
  if (report != nullptr) *report = plan.report;
  return plan.inputs;
}

// Closed loop on the true fractional-order plant with the truncated MVAR(p)
// model inside the controller. Each plan contributes exactly M plant steps
// (u_k .. u_{k+M-1}), then the loop replans at k + M from observed states.
inline SimulationTrace run_closed_loop(const FosModel& model, const MpcConfig& cfg,
                                       const Eigen::MatrixXd& B,
                                       const Eigen::MatrixXd& disturbance, Eigen::Index T,
                                       std::uint64_t seed,
                                       int plant_memory_cap = unbounded_memory,
                                       const Eigen::VectorXd& x0 = Eigen::VectorXd(),
                                       double dt = 1.0 / 160.0) {
  const Eigen::Index n = model.n();
  Eigen::MatrixXd d = disturbance;
  if (d.size() == 0) d = Eigen::MatrixXd::Zero(T, n);
  if (d.rows() != T || d.cols() != n)
    throw std::invalid_argument("run_closed_loop: disturbance must be T x n");

  MpcController controller(fos_to_mvar(model, cfg.p), B, cfg);
  FosSimulator sim(model, B, T, seed, plant_memory_cap, x0);

  SimulationTrace trace;
  trace.dt = dt;
  trace.inputs = Eigen::MatrixXd::Zero(T, B.cols());
  trace.disturbances = d;

  Eigen::Index k = 0;
  while (k < T) {
    MpcController::Plan plan = controller.plan(sim.states());
    if (!plan.report.converged)
      trace.events.emplace_back(k, "solver_warning");
    for (int m = 0; m < cfg.M && k < T; ++m, ++k) {
      const Eigen::VectorXd u = plan.inputs.row(m).transpose();
      trace.inputs.row(k) = u.transpose();
      if (k + 1 < T) sim.step(u, d.row(k).transpose());
    }
  }
  trace.states = sim.states();
  return trace;
}

}  // namespace fosmpc
