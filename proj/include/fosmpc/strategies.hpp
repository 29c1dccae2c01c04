#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "fosmpc/model.hpp"
#include "fosmpc/rng.hpp"
#include "fosmpc/simulate.hpp"
#include "fosmpc/trace.hpp"

namespace fosmpc {

// Wavelet-like disturbance bursts arriving as Poisson processes, one class
// per (amplitude, mean inter-arrival) pair. "Rates" given in seconds are
// interpreted as mean inter-arrival times by default; set values_are_rates to
// read them as arrivals per second instead.
struct BurstDisturbanceConfig {
  std::vector<double> amplitudes{0.25, 1.0};
  std::vector<double> mean_interarrivals_s{0.2, 1.0};
  bool values_are_rates = false;
  double burst_duration_s = 0.125;
  double dt = 1.0 / 160.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (amplitudes.size() != mean_interarrivals_s.size())
      throw std::invalid_argument("BurstDisturbanceConfig: class lists must have equal length");
    if (burst_duration_s <= 0.0 || dt <= 0.0)
      throw std::invalid_argument("BurstDisturbanceConfig: durations must be positive");
    for (double m : mean_interarrivals_s)
      if (m <= 0.0)
        throw std::invalid_argument("BurstDisturbanceConfig: inter-arrival means must be positive");
  }
};

struct BurstResult {
  Eigen::MatrixXd disturbance;  // T x n
  std::vector<std::pair<Eigen::Index, std::string>> events;
  std::vector<int> raw_arrival_counts;  // per class, before disjointness pruning
};

// Mexican-hat pulse sampled over `samples` steps, peak sample normalized to 1.
inline std::vector<double> ricker_pulse(int samples) {
  if (samples < 1) throw std::invalid_argument("ricker_pulse: samples must be >= 1");
  std::vector<double> pulse(static_cast<std::size_t>(samples));
  const double half = 0.5 * static_cast<double>(samples - 1);
  const double width = std::max(static_cast<double>(samples) / 8.0, 1e-9);
  double peak = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double tau = (static_cast<double>(s) - half) / width;
    pulse[static_cast<std::size_t>(s)] = (1.0 - tau * tau) * std::exp(-0.5 * tau * tau);
    peak = std::max(peak, std::abs(pulse[static_cast<std::size_t>(s)]));
  }
  for (double& v : pulse) v /= peak;
  return pulse;
}

// Draws arrivals for every class, merges them in time order, and discards any
// arrival that lands while another burst is still active, so at most one
// burst is in flight at any step. Each accepted burst stamps the scaled
// Ricker pulse on all channels.
inline BurstResult generate_bursts(const BurstDisturbanceConfig& cfg, Eigen::Index T,
                                   Eigen::Index n) {
  cfg.validate();
  if (T < 1) throw std::invalid_argument("generate_bursts: T must be >= 1");
  const double horizon_s = static_cast<double>(T) * cfg.dt;
  const int samples =
      std::max<int>(1, static_cast<int>(std::lround(cfg.burst_duration_s / cfg.dt)));
  const std::vector<double> pulse = ricker_pulse(samples);

  struct Arrival {
    double time;
    std::size_t cls;
  };
  std::vector<Arrival> arrivals;
  BurstResult out;
  out.raw_arrival_counts.assign(cfg.amplitudes.size(), 0);
  for (std::size_t c = 0; c < cfg.amplitudes.size(); ++c) {
    RandomStream rng(mix_seed(cfg.seed, c));
    const double mean = cfg.values_are_rates ? 1.0 / cfg.mean_interarrivals_s[c]
                                             : cfg.mean_interarrivals_s[c];
    double t = rng.exponential(mean);
    while (t < horizon_s) {
      arrivals.push_back({t, c});
      ++out.raw_arrival_counts[c];
      t += rng.exponential(mean);
    }
  }
  std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
    return a.time != b.time ? a.time < b.time : a.cls < b.cls;
  });

  out.disturbance = Eigen::MatrixXd::Zero(T, n);
  Eigen::Index active_until = 0;
  for (const Arrival& a : arrivals) {
    const Eigen::Index start = static_cast<Eigen::Index>(a.time / cfg.dt);
    if (start >= T || start < active_until) continue;
    const double amp = cfg.amplitudes[a.cls];
    for (int s = 0; s < samples && start + s < T; ++s)
      out.disturbance.row(start + s).array() += amp * pulse[static_cast<std::size_t>(s)];
    active_until = start + samples;
    char label[48];
    std::snprintf(label, sizeof label, "burst a=%g", amp);
    out.events.emplace_back(start, label);
  }
  return out;
}

struct OpenLoopConfig {
  enum class Waveform { sinusoid, biphasic_rect };
  Waveform waveform = Waveform::sinusoid;
  double amplitude = 0.5;
  double frequency_hz = 16.0;
  double phase = 0.0;  // radians
  double on_duration_s = 1.0;
  double off_duration_s = 0.5;
  double start_time_s = 4.0;

  void validate() const {
    if (on_duration_s <= 0.0 || off_duration_s <= 0.0)
      throw std::invalid_argument("OpenLoopConfig: on/off durations must be positive");
    if (start_time_s < 0.0)
      throw std::invalid_argument("OpenLoopConfig: start_time must be >= 0");
  }
};

inline double open_loop_waveform_value(const OpenLoopConfig& cfg, double t_in_cycle) {
  const double s = std::sin(2.0 * M_PI * cfg.frequency_hz * t_in_cycle + cfg.phase);
  switch (cfg.waveform) {
    case OpenLoopConfig::Waveform::sinusoid:
      return cfg.amplitude * s;
    case OpenLoopConfig::Waveform::biphasic_rect:
      return s > 0.0 ? cfg.amplitude : (s < 0.0 ? -cfg.amplitude : 0.0);
  }
  return 0.0;
}

// State-independent stimulus: zero before start_time, then on/off cycles of
// the configured waveform.
inline double open_loop_input(const OpenLoopConfig& cfg, Eigen::Index step, double dt) {
  if (step < 0) throw std::invalid_argument("open_loop_input: step must be >= 0");
  const double t = static_cast<double>(step) * dt;
  if (t < cfg.start_time_s) return 0.0;
  const double cycle = cfg.on_duration_s + cfg.off_duration_s;
  const double t_cyc = std::fmod(t - cfg.start_time_s, cycle);
  return t_cyc < cfg.on_duration_s ? open_loop_waveform_value(cfg, t_cyc) : 0.0;
}

inline InputFn open_loop_input_fn(const OpenLoopConfig& cfg, double dt) {
  cfg.validate();
  return [cfg, dt](Eigen::Index step) {
    Eigen::VectorXd u(1);
    u[0] = open_loop_input(cfg, step, dt);
    return u;
  };
}

// Sum of absolute first differences over a window, averaged across channels.
// Rows are steps, columns channels.
inline double line_length(const Eigen::Ref<const Eigen::MatrixXd>& window) {
  if (window.rows() < 2) throw std::invalid_argument("line_length: window needs >= 2 steps");
  double total = 0.0;
  for (Eigen::Index k = 1; k < window.rows(); ++k)
    total += (window.row(k) - window.row(k - 1)).cwiseAbs().sum();
  return total / static_cast<double>(window.cols());
}

struct LineLengthDetector {
  int window_steps = 40;       // 0.25 s at 160 Hz
  double threshold = 0.0;      // > 0; see calibrate_line_length_threshold
  int refractory_steps = 240;  // 1.5 s, one full stimulation cycle

  void validate() const {
    if (window_steps < 2) throw std::invalid_argument("LineLengthDetector: window_steps >= 2");
    if (!(threshold > 0.0)) throw std::invalid_argument("LineLengthDetector: threshold > 0");
  }
};

// Default threshold rule: twice the median sliding-window line length of an
// unforced, undisturbed calibration run of the given (quiet) model.
inline double calibrate_line_length_threshold(const FosModel& model, int window_steps,
                                              double dt, Eigen::Index T = 1600,
                                              std::uint64_t seed = 12345,
                                              int memory_cap = unbounded_memory) {
  const Eigen::MatrixXd B = uniform_input_matrix(model.n());
  const SimulationTrace trace =
      simulate_fos(model, B, zero_input(1), Eigen::MatrixXd(), T, seed, memory_cap,
                   Eigen::VectorXd(), dt);
  std::vector<double> values;
  for (Eigen::Index k = window_steps - 1; k < trace.steps(); ++k)
    values.push_back(line_length(trace.states.middleRows(k - window_steps + 1, window_steps)));
  if (values.empty()) throw std::invalid_argument("calibrate_line_length_threshold: run too short");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  const double median = values.size() % 2 == 1
                            ? values[mid]
                            : 0.5 * (values[mid - 1] + values[mid]);
  return 2.0 * median;
}

// Event-triggered open-loop control: the line-length detector watches the
// trailing window of the controlled trajectory; a crossing outside the
// refractory period deploys one on/off cycle of the open-loop waveform at
// twice its amplitude. A new trigger cannot interrupt an active cycle.
inline SimulationTrace run_event_triggered(const FosModel& model,
                                           const LineLengthDetector& detector,
                                           const OpenLoopConfig& ol_cfg,
                                           const Eigen::MatrixXd& B,
                                           const Eigen::MatrixXd& disturbance, Eigen::Index T,
                                           std::uint64_t seed,
                                           int plant_memory_cap = unbounded_memory,
                                           const Eigen::VectorXd& x0 = Eigen::VectorXd(),
                                           double dt = 1.0 / 160.0) {
  detector.validate();
  ol_cfg.validate();
  const Eigen::Index n = model.n();
  Eigen::MatrixXd d = disturbance;
  if (d.size() == 0) d = Eigen::MatrixXd::Zero(T, n);
  if (d.rows() != T || d.cols() != n)
    throw std::invalid_argument("run_event_triggered: disturbance must be T x n");

  OpenLoopConfig deployed = ol_cfg;
  deployed.amplitude = 2.0 * ol_cfg.amplitude;
  const Eigen::Index cycle_steps = static_cast<Eigen::Index>(
      std::lround((ol_cfg.on_duration_s + ol_cfg.off_duration_s) / dt));

  FosSimulator sim(model, B, T, seed, plant_memory_cap, x0);
  SimulationTrace trace;
  trace.dt = dt;
  trace.inputs = Eigen::MatrixXd::Zero(T, B.cols());
  trace.disturbances = d;

  Eigen::MatrixXd states(T, n);
  states.row(0) = sim.current_state().transpose();
  Eigen::Index last_trigger = -1;
  for (Eigen::Index k = 0; k < T; ++k) {
    const bool cycle_active = last_trigger >= 0 && k < last_trigger + cycle_steps;
    if (!cycle_active && k >= detector.window_steps - 1 &&
        (last_trigger < 0 || k >= last_trigger + detector.refractory_steps)) {
      const double ll = line_length(
          states.middleRows(k - detector.window_steps + 1, detector.window_steps));
      if (ll > detector.threshold) {
        last_trigger = k;
        trace.events.emplace_back(k, "trigger");
      }
    }
    Eigen::VectorXd u = Eigen::VectorXd::Zero(B.cols());
    if (last_trigger >= 0 && k < last_trigger + cycle_steps) {
      const double t_rel = static_cast<double>(k - last_trigger) * dt;
      if (t_rel < deployed.on_duration_s)
        u[0] = open_loop_waveform_value(deployed, t_rel);
    }
    trace.inputs.row(k) = u.transpose();
    if (k + 1 < T) {
      sim.step(u, d.row(k).transpose());
      states.row(k + 1) = sim.current_state().transpose();
    }
  }
  trace.states = states;
  return trace;
}

}  // namespace fosmpc
