#include <catch2/catch.hpp>

#include "fosmpc/mpc.hpp"
#include "fosmpc/riccati.hpp"
#include "fosmpc/rng.hpp"

using fosmpc::AugmentedLti;
using fosmpc::augment;
using fosmpc::build_qp;
using fosmpc::FosModel;
using fosmpc::MpcConfig;
using fosmpc::MpcController;
using fosmpc::MvarModel;
using fosmpc::prediction_matrices;
using fosmpc::QpProblem;

namespace {

MvarModel scalar_mvar(double a, double sigma2 = 0.0) {
  MvarModel m;
  m.lag_matrices.push_back(Eigen::MatrixXd::Constant(1, 1, a));
  m.sigma_w2 = sigma2;
  return m;
}

MpcConfig small_cfg(int p, int P, int M) {
  MpcConfig cfg;
  cfg.p = p;
  cfg.P = P;
  cfg.M = M;
  cfg.q_weight = 1.0;
  cfg.r_weight = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("condensed quadratic matches the hand expansion") {
  const AugmentedLti aug = augment(scalar_mvar(0.5), Eigen::MatrixXd::Ones(1, 1));
  const auto pred = prediction_matrices(aug, 2);
  const MpcConfig cfg = small_cfg(1, 2, 1);
  const QpProblem qp = build_qp(pred, Eigen::VectorXd::Ones(1), cfg);
  // Gamma = [1 0; 0.5 1], Phi = [0.5; 0.25]
  REQUIRE(qp.H(0, 0) == Approx(4.5).margin(1e-15));
  REQUIRE(qp.H(0, 1) == Approx(1.0).margin(1e-15));
  REQUIRE(qp.H(1, 0) == Approx(1.0).margin(1e-15));
  REQUIRE(qp.H(1, 1) == Approx(4.0).margin(1e-15));
  REQUIRE(qp.g[0] == Approx(1.25).margin(1e-15));
  REQUIRE(qp.g[1] == Approx(0.5).margin(1e-15));
  REQUIRE(std::isinf(qp.lower[0]));
  REQUIRE(std::isinf(qp.upper[1]));
}

TEST_CASE("zero state weight leaves only the input penalty") {
  const AugmentedLti aug = augment(scalar_mvar(0.9), Eigen::MatrixXd::Ones(1, 1));
  const auto pred = prediction_matrices(aug, 3);
  MpcConfig cfg = small_cfg(1, 3, 1);
  cfg.q_weight = 0.0;
  cfg.r_weight = 2.0;
  const QpProblem qp = build_qp(pred, Eigen::VectorXd::Ones(1), cfg);
  REQUIRE((qp.H - 4.0 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(qp.g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear state cost enters through the forced-response map") {
  const AugmentedLti aug = augment(scalar_mvar(0.5), Eigen::MatrixXd::Ones(1, 1));
  const auto pred = prediction_matrices(aug, 2);
  MpcConfig cfg = small_cfg(1, 2, 1);
  cfg.q_weight = 0.0;
  cfg.c = Eigen::VectorXd::Ones(1);
  const QpProblem qp = build_qp(pred, Eigen::VectorXd::Zero(1), cfg);
  REQUIRE(qp.g[0] == Approx(1.5).margin(1e-15));
  REQUIRE(qp.g[1] == Approx(1.0).margin(1e-15));
}

TEST_CASE("one-step plan recovers the scalar feedback gain") {
  MpcConfig cfg = small_cfg(1, 1, 1);
  MpcController controller(scalar_mvar(1.0), Eigen::MatrixXd::Ones(1, 1), cfg);
  const auto plan = controller.plan(Eigen::MatrixXd::Ones(1, 1));
  REQUIRE(plan.inputs(0, 0) == Approx(-0.5).margin(1e-8));
}

TEST_CASE("plans ignore the noise power") {
  MpcConfig cfg = small_cfg(2, 6, 2);
  Eigen::MatrixXd history(3, 1);
  history << 0.3, -1.2, 0.7;
  auto two_lag = [](double sigma2) {
    MvarModel m = scalar_mvar(0.8, sigma2);
    m.lag_matrices.push_back(Eigen::MatrixXd::Constant(1, 1, -0.2));
    return m;
  };
  MpcController quiet(two_lag(0.0), Eigen::MatrixXd::Ones(1, 1), cfg);
  MpcController loud(two_lag(5.0), Eigen::MatrixXd::Ones(1, 1), cfg);
  const auto a = quiet.plan(history);
  const auto b = loud.plan(history);
  REQUIRE((a.full_horizon - b.full_horizon).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quiescent history plans zero input") {
  MpcConfig cfg = small_cfg(4, 8, 4);
  const FosModel model = fosmpc::builtin_ictal_model();
  const Eigen::MatrixXd inputs = fosmpc::mpc_step(
      Eigen::MatrixXd::Zero(6, 4), cfg, fos_to_mvar(model, cfg.p),
      fosmpc::uniform_input_matrix(4));
  REQUIRE(inputs.rows() == 4);
  REQUIRE(inputs.cols() == 1);
  REQUIRE(inputs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full-width control horizon returns the whole plan") {
  MpcConfig cfg = small_cfg(1, 5, 5);
  MpcController controller(scalar_mvar(0.7), Eigen::MatrixXd::Ones(1, 1), cfg);
  const auto plan = controller.plan(Eigen::MatrixXd::Constant(1, 1, 2.0));
  REQUIRE(plan.inputs.rows() == 5);
  for (int m = 0; m < 5; ++m) REQUIRE(plan.inputs(m, 0) == plan.full_horizon[m]);
}

TEST_CASE("input bounds are honored exactly") {
  MpcConfig cfg = small_cfg(1, 6, 3);
  cfg.u_min = Eigen::VectorXd::Constant(1, -0.01);
  cfg.u_max = Eigen::VectorXd::Constant(1, 0.01);
  MpcController controller(scalar_mvar(0.95), Eigen::MatrixXd::Ones(1, 1), cfg);
  const auto plan = controller.plan(Eigen::MatrixXd::Constant(1, 1, 10.0));
  REQUIRE(plan.full_horizon.cwiseAbs().maxCoeff() <= 0.01);
  // the drive is strong enough that the first move saturates
  REQUIRE(plan.inputs(0, 0) == -0.01);
}

TEST_CASE("widening the box never worsens the planned objective") {
  const AugmentedLti aug = augment(scalar_mvar(0.9), Eigen::MatrixXd::Ones(1, 1));
  const auto pred = prediction_matrices(aug, 8);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 3.0);
  MpcConfig cfg = small_cfg(1, 8, 1);
  const auto objective = [](const QpProblem& qp, const Eigen::VectorXd& u) {
    return 0.5 * u.dot(qp.H * u) + qp.g.dot(u);
  };
  double prev = std::numeric_limits<double>::infinity();
  for (const double box : {0.05, 0.2, 1.0, 1e9}) {
    MpcConfig c = cfg;
    c.u_min = Eigen::VectorXd::Constant(1, -box);
    c.u_max = Eigen::VectorXd::Constant(1, box);
    const QpProblem qp = build_qp(pred, x, c);
    const auto res = solve_box_qp(qp, 1e-10, 20000);
    REQUIRE(res.converged);
    const double j = objective(qp, res.u);
    REQUIRE(j <= prev + 1e-9);
    prev = j;
  }
}

TEST_CASE("noise-free loop from rest stays at rest") {
  FosModel model = fosmpc::builtin_ictal_model();
  model.sigma_w2 = 0.0;
  MpcConfig cfg = small_cfg(4, 8, 4);
  const auto trace = run_closed_loop(model, cfg, fosmpc::uniform_input_matrix(4),
                                     Eigen::MatrixXd(), 40, 9);
  REQUIRE(trace.states.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(trace.inputs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closed loop matches a hand-rolled plan-and-apply cycle") {
  const FosModel model = fosmpc::builtin_ictal_model();
  MpcConfig cfg = small_cfg(4, 8, 3);
  cfg.u_min = Eigen::VectorXd::Constant(1, -1.0);
  cfg.u_max = Eigen::VectorXd::Constant(1, 1.0);
  const Eigen::MatrixXd B = fosmpc::uniform_input_matrix(4);
  const Eigen::Index T = 9;
  const std::uint64_t seed = 31;

  const auto trace = run_closed_loop(model, cfg, B, Eigen::MatrixXd(), T, seed, 64);

  MpcController controller(fos_to_mvar(model, cfg.p), B, cfg);
  fosmpc::FosSimulator sim(model, B, T, seed, 64);
  Eigen::MatrixXd inputs(T, 1);
  Eigen::Index k = 0;
  while (k < T) {
    const auto plan = controller.plan(sim.states());
    for (int m = 0; m < cfg.M && k < T; ++m, ++k) {
      inputs.row(k) = plan.inputs.row(m);
      if (k + 1 < T) sim.step(plan.inputs.row(m).transpose(), Eigen::VectorXd::Zero(4));
    }
  }
  REQUIRE((trace.inputs - inputs).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((trace.states - sim.states()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("starved solver budget is reported as a warning") {
  const FosModel model = fosmpc::builtin_ictal_model();
  MpcConfig cfg = small_cfg(4, 8, 4);
  cfg.solver_max_iter = 1;
  cfg.solver_tol = 1e-300;
  Eigen::VectorXd x0 = Eigen::VectorXd::Ones(4);
  const auto trace = run_closed_loop(model, cfg, fosmpc::uniform_input_matrix(4),
                                     Eigen::MatrixXd(), 8, 4, fosmpc::unbounded_memory, x0);
  bool warned = false;
  for (const auto& ev : trace.events) warned = warned || ev.second == "solver_warning";
  REQUIRE(warned);
}

TEST_CASE("controller configuration is validated") {
  MpcConfig cfg = small_cfg(2, 4, 2);
  REQUIRE_THROWS_AS(MpcController(scalar_mvar(0.5), Eigen::MatrixXd::Ones(1, 1), cfg),
                    std::invalid_argument);  // cfg.p != model order
  cfg = small_cfg(1, 4, 5);
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);  // M > P
  cfg = small_cfg(1, 4, 2);
  cfg.u_min = Eigen::VectorXd::Constant(1, 1.0);
  cfg.u_max = Eigen::VectorXd::Constant(1, -1.0);
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.u_max = Eigen::VectorXd::Ones(2);
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("single-stage feedback gain has the textbook value") {
  const AugmentedLti aug = augment(scalar_mvar(1.0), Eigen::MatrixXd::Ones(1, 1));
  const MpcConfig cfg = small_cfg(1, 1, 1);
  const auto sol = fosmpc::riccati_lqr(aug, cfg, 1);
  REQUIRE(sol.gains.size() == 1);
  REQUIRE(sol.gains[0](0, 0) == Approx(-0.5).margin(1e-14));
  REQUIRE(sol.cost_to_go.size() == 2);
  REQUIRE(sol.cost_to_go[1](0, 0) == 0.0);
}

TEST_CASE("free dynamics earn zero feedback when states are not penalized") {
  fosmpc::RandomStream rng(8);
  MvarModel m;
  Eigen::MatrixXd a(2, 2);
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index c = 0; c < 2; ++c) a(r, c) = 0.3 * rng.normal();
  m.lag_matrices.push_back(a);
  const AugmentedLti aug = augment(m, Eigen::MatrixXd::Identity(2, 2));
  MpcConfig cfg = small_cfg(1, 4, 1);
  cfg.q_weight = 0.0;
  const auto sol = fosmpc::riccati_lqr(aug, cfg, 4);
  for (const auto& k : sol.gains) REQUIRE(k.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unconstrained receding-horizon move equals the dynamic-program gain") {
  fosmpc::RandomStream rng(44);
  MvarModel m;
  Eigen::MatrixXd a(2, 2);
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index c = 0; c < 2; ++c) a(r, c) = 0.4 * rng.normal();
  m.lag_matrices.push_back(a);
  Eigen::MatrixXd b(2, 1);
  b << 1.0, -0.5;
  MpcConfig cfg = small_cfg(1, 5, 1);
  cfg.q_weight = 3.0;
  cfg.solver_tol = 1e-12;
  cfg.solver_max_iter = 50000;
  const AugmentedLti aug = augment(m, b);
  const auto lqr = fosmpc::riccati_lqr(aug, cfg, 5);

  MpcController controller(m, b, cfg);
  Eigen::MatrixXd history(1, 2);
  history << 1.3, -0.4;
  const auto plan = controller.plan(history);
  const Eigen::VectorXd expected = lqr.gains[0] * history.row(0).transpose();
  REQUIRE((plan.inputs.row(0).transpose() - expected).cwiseAbs().maxCoeff() < 1e-8);
}
