#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fosmpc {

// minimize 1/2 U^T H U + g^T U  subject to lower <= U <= upper (componentwise)
struct QpProblem {
  Eigen::MatrixXd H;  // symmetric, PSD; PD when the input weight is positive
  Eigen::VectorXd g;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index dim() const { return g.size(); }
};

struct BoxQpResult {
  Eigen::VectorXd u;     // always within bounds, even on early termination
  bool converged = false;
  int iterations = 0;
  double pg_norm = 0.0;  // projected-gradient norm at the returned point
};

namespace detail {

inline Eigen::VectorXd clamp(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

// Largest eigenvalue estimate by 50 power-iteration steps from a fixed
// deterministic start vector.
inline double power_iteration_max_eig(const Eigen::MatrixXd& H) {
  const Eigen::Index d = H.rows();
  Eigen::VectorXd v(d);
  // fixed pseudo-random start so no eigenvector of a structured H is missed
  std::uint64_t s = 0x6b43a9b1u;
  for (Eigen::Index i = 0; i < d; ++i) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    v[i] = 0.5 + static_cast<double>(s >> 40) / 33554432.0;
  }
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd w = H * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    lambda = v.dot(w);
    v = w / norm;
  }
  return std::abs(lambda);
}

}  // namespace detail

// Accelerated projected gradient with step 1/L, L estimated by power
// iteration (criterion: projected-gradient norm <= tol). The smallest
// eigenvalue is estimated the same way on L*I - H; when it is positive the
// strongly convex momentum is used, otherwise FISTA momentum with adaptive
// restart. Every iterate is a projection, so the returned point satisfies the
// bounds exactly even when the iteration budget runs out.
inline BoxQpResult solve_box_qp(const QpProblem& qp, double tol = 1e-8, int max_iter = 2000,
                                const Eigen::VectorXd* warm_start = nullptr) {
  const Eigen::Index d = qp.dim();
  if (qp.H.rows() != d || qp.H.cols() != d)
    throw std::invalid_argument("solve_box_qp: H must be dim x dim");
  if (qp.lower.size() != d || qp.upper.size() != d)
    throw std::invalid_argument("solve_box_qp: bound dimension mismatch");
  if (((qp.upper - qp.lower).array() < 0.0).any())
    throw std::invalid_argument("solve_box_qp: lower must be <= upper");

  const double l_raw = detail::power_iteration_max_eig(qp.H);
  const double L = std::max(l_raw * 1.01, 1e-12);
  const double mu_raw = L - detail::power_iteration_max_eig(L * Eigen::MatrixXd::Identity(d, d) - qp.H);
  const double mu = std::max(mu_raw, 0.0);
  const bool strongly_convex = mu > 1e-10 * L;
  const double beta_sc = strongly_convex
                             ? (std::sqrt(L) - std::sqrt(mu)) / (std::sqrt(L) + std::sqrt(mu))
                             : 0.0;

  Eigen::VectorXd x = warm_start != nullptr && warm_start->size() == d
                          ? detail::clamp(*warm_start, qp.lower, qp.upper)
                          : detail::clamp(Eigen::VectorXd::Zero(d), qp.lower, qp.upper);
  Eigen::VectorXd y = x;
  Eigen::VectorXd x_prev = x;
  double t = 1.0;

  BoxQpResult best;
  best.u = x;
  best.pg_norm = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd grad_y = qp.H * y + qp.g;
    Eigen::VectorXd x_next = detail::clamp(y - grad_y / L, qp.lower, qp.upper);

    const Eigen::VectorXd grad_x = qp.H * x_next + qp.g;
    const double pg =
        L * (x_next - detail::clamp(x_next - grad_x / L, qp.lower, qp.upper)).norm();
    if (pg < best.pg_norm) {
      best.pg_norm = pg;
      best.u = x_next;
    }
    best.iterations = it;
    if (pg <= tol) {
      best.converged = true;
      return best;
    }

    if (strongly_convex) {
      y = x_next + beta_sc * (x_next - x);
    } else {
      // adaptive restart: drop momentum when it points uphill
      if (grad_y.dot(x_next - x) > 0.0) t = 1.0;
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_next + ((t - 1.0) / t_next) * (x_next - x);
      t = t_next;
    }
    x_prev = x;
    x = x_next;
  }
  return best;  // converged stays false: convergence warning with best iterate
}

}  // namespace fosmpc
