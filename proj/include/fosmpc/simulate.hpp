#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fosmpc/gl.hpp"
#include "fosmpc/model.hpp"
#include "fosmpc/rng.hpp"
#include "fosmpc/trace.hpp"

namespace fosmpc {

// memory_cap value meaning "keep the whole history" (O(T^2) work, fine at
// desk scale); any cap >= 1 runs the truncated MVAR recursion instead.
inline constexpr int unbounded_memory = -1;

// Step-by-step engine for the forced fractional-order plant
//   x_{k+1} = A_0 x_k + sum_{j>=1} A_j x_{k-j} + B u_k + w_k + d_k,
// with A_0 = A + diag(alpha) and diagonal tail lags from the fractional
// difference expansion. States before step 0 are zero. The noise stream is a
// pure function of the seed, so runs sharing a seed see identical noise
// regardless of the inputs applied.
class FosSimulator {
 public:
  FosSimulator(const FosModel& model, const Eigen::MatrixXd& B, Eigen::Index T,
               std::uint64_t seed, int memory_cap = unbounded_memory,
               const Eigen::VectorXd& x0 = Eigen::VectorXd())
      : n_(model.n()), n_u_(B.cols()), total_steps_(T) {
    model.validate();
    if (T < 1) throw std::invalid_argument("FosSimulator: T must be >= 1");
    if (B.rows() != n_) throw std::invalid_argument("FosSimulator: B must have n rows");
    if (memory_cap != unbounded_memory && memory_cap < 1)
      throw std::invalid_argument("FosSimulator: memory_cap must be >= 1 or unbounded");

    const Eigen::Index lags_wanted =
        memory_cap == unbounded_memory ? T : std::min<Eigen::Index>(memory_cap, T);
    lag_count_ = std::max<Eigen::Index>(lags_wanted, 1);

    const GlCoefficients gl = gl_coefficients(model.alpha, static_cast<int>(lag_count_));
    a0_ = model.A;
    a0_.diagonal() -= gl.psi.col(1);
    tail_.assign(static_cast<std::size_t>(n_), {});
    for (Eigen::Index i = 0; i < n_; ++i) {
      tail_[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(lag_count_), 0.0);
      for (Eigen::Index j = 1; j < lag_count_; ++j)
        tail_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = -gl.psi(i, j + 1);
    }
    b_ = B;
    noise_ = std::sqrt(model.sigma_w2) * gaussian_matrix(T, n_, seed);

    history_.assign(static_cast<std::size_t>(n_), {});
    for (auto& h : history_) h.reserve(static_cast<std::size_t>(T));
    Eigen::VectorXd start = x0.size() == 0 ? Eigen::VectorXd::Zero(n_) : x0;
    if (start.size() != n_) throw std::invalid_argument("FosSimulator: x0 must have n entries");
    push_state(start);
  }

  Eigen::Index n() const { return n_; }
  Eigen::Index n_inputs() const { return n_u_; }
  Eigen::Index total_steps() const { return total_steps_; }
  // index of the latest known state x_k
  Eigen::Index current_step() const { return static_cast<Eigen::Index>(history_[0].size()) - 1; }

  Eigen::VectorXd state_at(Eigen::Index k) const {
    Eigen::VectorXd x(n_);
    for (Eigen::Index i = 0; i < n_; ++i) x[i] = history_[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    return x;
  }
  Eigen::VectorXd current_state() const { return state_at(current_step()); }

  // Applies u_k and d_k at the current step k and computes x_{k+1}.
  void step(const Eigen::VectorXd& u, const Eigen::VectorXd& d) {
    const Eigen::Index k = current_step();
    if (k + 1 >= total_steps_) throw std::logic_error("FosSimulator: horizon exhausted");
    if (u.size() != n_u_) throw std::invalid_argument("FosSimulator: input dimension mismatch");
    if (d.size() != n_) throw std::invalid_argument("FosSimulator: disturbance dimension mismatch");

    Eigen::VectorXd next = a0_ * current_state();
    const Eigen::Index max_j = std::min<Eigen::Index>(k, lag_count_ - 1);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double* hist = history_[static_cast<std::size_t>(i)].data();
      const double* tail = tail_[static_cast<std::size_t>(i)].data();
      double acc = 0.0;
      for (Eigen::Index j = 1; j <= max_j; ++j) acc += tail[j] * hist[k - j];
      next[i] += acc;
    }
    next.noalias() += b_ * u;
    next += noise_.row(k).transpose();
    next += d;
    push_state(next);
  }

  // All known states as a (current_step()+1) x n matrix, row k = x_k.
  Eigen::MatrixXd states() const {
    const Eigen::Index rows = current_step() + 1;
    Eigen::MatrixXd out(rows, n_);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index k = 0; k < rows; ++k)
        out(k, i) = history_[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    return out;
  }

 private:
  void push_state(const Eigen::VectorXd& x) {
    for (Eigen::Index i = 0; i < n_; ++i) history_[static_cast<std::size_t>(i)].push_back(x[i]);
  }

  Eigen::Index n_, n_u_, total_steps_, lag_count_;
  Eigen::MatrixXd a0_, b_, noise_;
  std::vector<std::vector<double>> tail_;     // per channel, index j = lag
  std::vector<std::vector<double>> history_;  // per channel, index k = step
};

using InputFn = std::function<Eigen::VectorXd(Eigen::Index)>;

inline InputFn zero_input(Eigen::Index n_u) {
  return [n_u](Eigen::Index) { return Eigen::VectorXd::Zero(n_u); };
}

// Runs the forced plant for T steps. The disturbance array may be empty
// (no disturbance) or T x n. Identical seed and arguments reproduce the trace
// bit for bit.
inline SimulationTrace simulate_fos(const FosModel& model, const Eigen::MatrixXd& B,
                                    const InputFn& input_fn, const Eigen::MatrixXd& disturbance,
                                    Eigen::Index T, std::uint64_t seed,
                                    int memory_cap = unbounded_memory,
                                    const Eigen::VectorXd& x0 = Eigen::VectorXd(),
                                    double dt = 1.0 / 160.0) {
  const Eigen::Index n = model.n();
  Eigen::MatrixXd d = disturbance;
  if (d.size() == 0) d = Eigen::MatrixXd::Zero(T, n);
  if (d.rows() != T || d.cols() != n)
    throw std::invalid_argument("simulate_fos: disturbance must be T x n");

  FosSimulator sim(model, B, T, seed, memory_cap, x0);
  SimulationTrace trace;
  trace.dt = dt;
  trace.inputs.resize(T, sim.n_inputs());
  trace.disturbances = d;
  for (Eigen::Index k = 0; k < T; ++k) {
    const Eigen::VectorXd u = input_fn(k);
    if (u.size() != sim.n_inputs())
      throw std::invalid_argument("simulate_fos: input_fn output dimension mismatch");
    trace.inputs.row(k) = u.transpose();
    if (k + 1 < T) sim.step(u, d.row(k).transpose());
  }
  trace.states = sim.states();
  return trace;
}

}  // namespace fosmpc
