#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <numeric>
#include <string>
#include <vector>

#include "fosmpc/config.hpp"
#include "fosmpc/csv.hpp"
#include "fosmpc/errors.hpp"
#include "fosmpc/model.hpp"
#include "fosmpc/mpc.hpp"
#include "fosmpc/rng.hpp"
#include "fosmpc/simulate.hpp"
#include "fosmpc/strategies.hpp"
#include "fosmpc/sysid.hpp"

namespace fosmpc {

enum class Strategy { none, open_loop, event_triggered, mpc };

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "none") return Strategy::none;
  if (s == "open_loop") return Strategy::open_loop;
  if (s == "event_triggered") return Strategy::event_triggered;
  if (s == "mpc") return Strategy::mpc;
  throw ConfigError("unknown strategy '" + s + "'");
}

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::open_loop: return "open_loop";
    case Strategy::event_triggered: return "event_triggered";
    case Strategy::mpc: return "mpc";
  }
  return "none";
}

struct ExperimentConfig {
  FosModel model = builtin_ictal_model();
  Eigen::MatrixXd B;  // empty = uniform single input
  Strategy strategy = Strategy::none;
  OpenLoopConfig open_loop;
  MpcConfig mpc;
  LineLengthDetector detector;  // threshold <= 0 = calibrate automatically
  BurstDisturbanceConfig bursts;
  bool bursts_enabled = true;
  double duration_s = 10.0;
  double dt = 1.0 / 160.0;
  std::vector<std::uint64_t> seeds{1};
  double eval_start_s = -1.0;  // < 0 = strategy default (waveform start for open loop)
  Eigen::VectorXd x0;
  // The identified seizure dynamics are exponentially unstable when iterated
  // with their full hereditary tail (spectral radius ~1.014), which would
  // dwarf every bounded stimulus within seconds. Experiments therefore run
  // the plant in the truncated mode by default; eight lags keeps the
  // seizure-like oscillation bounded while preserving the memory character.
  int plant_memory_cap = 8;
};

struct RunMetrics {
  std::uint64_t seed = 0;
  double energy_uncontrolled = 0.0;
  double energy_controlled = 0.0;
  double energy_ratio = 1.0;
  double input_energy = 0.0;
  double max_abs_input = 0.0;
  int trigger_count = 0;
  int burst_count = 0;
  bool solver_warning = false;
};

// Both branches of one seed: identical plant noise and identical bursts, the
// only difference being the applied input.
struct PairedRun {
  SimulationTrace uncontrolled;
  SimulationTrace controlled;
  RunMetrics metrics;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

namespace detail {

// salts separating the independent sub-streams drawn from one run seed
inline constexpr std::uint64_t plant_noise_salt = 0x706c616e74;  // "plant"
inline constexpr std::uint64_t burst_salt = 0x6275727374;        // "burst"

inline double window_energy(const Eigen::MatrixXd& states, Eigen::Index k0) {
  const Eigen::Index rows = states.rows() - k0;
  return states.bottomRows(rows).squaredNorm() /
         static_cast<double>(rows * states.cols());
}

}  // namespace detail

// Runs the reference (zero-input) branch and the strategy branch under shared
// seed-derived noise and disturbance streams, then scores them. The detector
// threshold must already be resolved (> 0) for the event-triggered strategy.
inline PairedRun run_paired(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.model.validate();
  const Eigen::Index n = cfg.model.n();
  const Eigen::MatrixXd B = cfg.B.size() != 0 ? cfg.B : uniform_input_matrix(n);
  const auto T = static_cast<Eigen::Index>(std::llround(cfg.duration_s / cfg.dt));
  if (T < 2) throw ConfigError("experiment duration must cover at least 2 steps");

  Eigen::MatrixXd d;
  std::vector<std::pair<Eigen::Index, std::string>> burst_events;
  if (cfg.bursts_enabled) {
    BurstDisturbanceConfig bc = cfg.bursts;
    bc.dt = cfg.dt;
    bc.seed = mix_seed(seed, detail::burst_salt);
    BurstResult bursts = generate_bursts(bc, T, n);
    d = std::move(bursts.disturbance);
    burst_events = std::move(bursts.events);
  }

  const std::uint64_t plant_seed = mix_seed(seed, detail::plant_noise_salt);
  PairedRun out;
  out.uncontrolled = simulate_fos(cfg.model, B, zero_input(B.cols()), d, T, plant_seed,
                                  cfg.plant_memory_cap, cfg.x0, cfg.dt);
  switch (cfg.strategy) {
    case Strategy::none:
      out.controlled = out.uncontrolled;
      break;
    case Strategy::open_loop:
      out.controlled = simulate_fos(cfg.model, B, open_loop_input_fn(cfg.open_loop, cfg.dt), d,
                                    T, plant_seed, cfg.plant_memory_cap, cfg.x0, cfg.dt);
      break;
    case Strategy::event_triggered:
      out.controlled = run_event_triggered(cfg.model, cfg.detector, cfg.open_loop, B, d, T,
                                           plant_seed, cfg.plant_memory_cap, cfg.x0, cfg.dt);
      break;
    case Strategy::mpc:
      out.controlled = run_closed_loop(cfg.model, cfg.mpc, B, d, T, plant_seed,
                                       cfg.plant_memory_cap, cfg.x0, cfg.dt);
      break;
  }
  for (const auto& ev : burst_events) {
    out.uncontrolled.events.push_back(ev);
    out.controlled.events.push_back(ev);
  }
  const auto by_step = [](const auto& a, const auto& b) { return a.first < b.first; };
  std::stable_sort(out.uncontrolled.events.begin(), out.uncontrolled.events.end(), by_step);
  std::stable_sort(out.controlled.events.begin(), out.controlled.events.end(), by_step);

  double eval_start = cfg.eval_start_s;
  if (eval_start < 0.0)
    eval_start = cfg.strategy == Strategy::open_loop ? cfg.open_loop.start_time_s : 0.0;
  const Eigen::Index k0 = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::llround(eval_start / cfg.dt)), 0, T - 1);

  RunMetrics& m = out.metrics;
  m.seed = seed;
  m.energy_uncontrolled = detail::window_energy(out.uncontrolled.states, k0);
  m.energy_controlled = detail::window_energy(out.controlled.states, k0);
  m.energy_ratio = m.energy_uncontrolled > 0.0
                       ? m.energy_controlled / m.energy_uncontrolled
                       : (m.energy_controlled > 0.0
                              ? std::numeric_limits<double>::infinity()
                              : 1.0);
  m.input_energy = out.controlled.inputs.bottomRows(T - k0).squaredNorm() /
                   static_cast<double>(T - k0);
  m.max_abs_input =
      out.controlled.inputs.size() == 0 ? 0.0 : out.controlled.inputs.cwiseAbs().maxCoeff();
  m.burst_count = static_cast<int>(burst_events.size());
  for (const auto& [step, label] : out.controlled.events) {
    if (label == "trigger") ++m.trigger_count;
    if (label == "solver_warning") m.solver_warning = true;
  }
  return out;
}

struct ExperimentResult {
  ExperimentConfig config;  // with the detector threshold resolved
  std::vector<RunMetrics> per_seed;
  double median_energy_ratio = 1.0;
  double mean_energy_ratio = 1.0;
  bool any_solver_warning = false;
  std::vector<PairedRun> runs;  // populated only when keep_traces
};

// Resolves an auto threshold against a tenth-noise quiet regime of the same
// model, which for the builtin model is its inter-ictal companion.
inline void resolve_detector_threshold(ExperimentConfig& cfg) {
  if (cfg.strategy != Strategy::event_triggered || cfg.detector.threshold > 0.0) return;
  FosModel quiet = cfg.model;
  quiet.sigma_w2 = cfg.model.sigma_w2 / 10.0;
  cfg.detector.threshold = calibrate_line_length_threshold(
      quiet, cfg.detector.window_steps, cfg.dt, 1600, 12345, cfg.plant_memory_cap);
}

inline ExperimentResult run_experiment(ExperimentConfig cfg, bool keep_traces = false) {
  if (cfg.seeds.empty()) throw ConfigError("experiment needs at least one seed");
  resolve_detector_threshold(cfg);

  std::vector<std::future<PairedRun>> jobs;
  jobs.reserve(cfg.seeds.size());
  for (const std::uint64_t seed : cfg.seeds)
    jobs.push_back(std::async(std::launch::async,
                              [&cfg, seed] { return run_paired(cfg, seed); }));

  ExperimentResult result;
  std::vector<double> ratios;
  for (auto& job : jobs) {
    PairedRun run = job.get();
    ratios.push_back(run.metrics.energy_ratio);
    result.any_solver_warning |= run.metrics.solver_warning;
    result.per_seed.push_back(run.metrics);
    if (keep_traces) result.runs.push_back(std::move(run));
  }
  result.median_energy_ratio = median(ratios);
  result.mean_energy_ratio =
      std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size());
  result.config = std::move(cfg);
  return result;
}

struct SweepRow {
  int p = 0;
  double median_energy_ratio = 0.0;
  double mean_energy_ratio = 0.0;
  double wall_time_s = 0.0;
};

// Controller-memory sweep: same seeds and plant for every p, only the
// predictive model order changes.
inline std::vector<SweepRow> sweep_memory(const ExperimentConfig& base,
                                          const std::vector<int>& p_values) {
  if (base.strategy != Strategy::mpc)
    throw ConfigError("the memory sweep requires strategy = mpc");
  if (p_values.empty()) throw ConfigError("the memory sweep needs at least one p value");
  std::vector<SweepRow> rows;
  for (const int p : p_values) {
    ExperimentConfig cfg = base;
    cfg.mpc.p = p;
    const auto start = std::chrono::steady_clock::now();
    const ExperimentResult res = run_experiment(cfg);
    const auto stop = std::chrono::steady_clock::now();
    SweepRow row;
    row.p = p;
    row.median_energy_ratio = res.median_energy_ratio;
    row.mean_energy_ratio = res.mean_energy_ratio;
    row.wall_time_s = std::chrono::duration<double>(stop - start).count();
    rows.push_back(row);
  }
  return rows;
}

struct CompareRow {
  Strategy strategy = Strategy::none;
  double median_energy_ratio = 0.0;
  double mean_energy_ratio = 0.0;
  double mean_input_energy = 0.0;
  double max_abs_input = 0.0;
  int total_triggers = 0;
};

inline std::vector<CompareRow> compare_strategies(const ExperimentConfig& base,
                                                  const std::vector<Strategy>& strategies) {
  std::vector<CompareRow> rows;
  for (const Strategy s : strategies) {
    ExperimentConfig cfg = base;
    cfg.strategy = s;
    const ExperimentResult res = run_experiment(cfg);
    CompareRow row;
    row.strategy = s;
    row.median_energy_ratio = res.median_energy_ratio;
    row.mean_energy_ratio = res.mean_energy_ratio;
    for (const RunMetrics& m : res.per_seed) {
      row.mean_input_energy += m.input_energy;
      row.max_abs_input = std::max(row.max_abs_input, m.max_abs_input);
      row.total_triggers += m.trigger_count;
    }
    row.mean_input_energy /= static_cast<double>(res.per_seed.size());
    rows.push_back(row);
  }
  return rows;
}

// ---- configuration plumbing ----

inline FosModel resolve_model(const KeyValueConfig& kv) {
  const std::string source = kv.get_string("model", "builtin_paper");
  if (source == "builtin_paper") return builtin_ictal_model();
  if (source == "builtin_quiet") return builtin_interictal_model();
  if (source == "explicit") {
    const Eigen::MatrixXd A = kv.get_matrix("model.A");
    const std::vector<double> al = kv.get_double_list("model.alpha", {});
    const Eigen::VectorXd alpha =
        Eigen::Map<const Eigen::VectorXd>(al.data(), static_cast<Eigen::Index>(al.size()));
    const double sigma_w2 = kv.get_double("model.sigma_w2", 0.2);
    try {
      return FosModel(A, alpha, sigma_w2);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("explicit model: ") + e.what());
    }
  }
  if (source == "identified-from-file") {
    const std::string path = kv.get_string("model.file", "");
    if (path.empty()) throw ConfigError("model = identified-from-file needs model.file");
    const auto channels = static_cast<Eigen::Index>(kv.get_int("model.channels", 4));
    Eigen::MatrixXd data = ingest_eeg_csv(path, channels);
    if (kv.get_bool("model.normalize", true)) data = normalize(data).first;
    AlphaGrid grid;
    grid.lo = kv.get_double("id.alpha_lo", grid.lo);
    grid.hi = kv.get_double("id.alpha_hi", grid.hi);
    grid.step = kv.get_double("id.alpha_step", grid.step);
    const int p_fit = kv.get_int("id.p_fit", 512);
    const int passes = kv.get_int("id.passes", 3);
    try {
      return identify(data, p_fit, grid, passes).model;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("identification: ") + e.what());
    }
  }
  throw ConfigError("unknown model source '" + source + "'");
}

inline ExperimentConfig experiment_config_from_kv(const KeyValueConfig& kv,
                                                  Strategy default_strategy) {
  ExperimentConfig cfg;
  cfg.model = resolve_model(kv);
  const Eigen::Index n = cfg.model.n();
  if (kv.has("input.b")) {
    const std::vector<double> b = kv.get_double_list("input.b", {});
    if (static_cast<Eigen::Index>(b.size()) != n)
      throw ConfigError("input.b must list one gain per channel");
    cfg.B = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
  } else {
    cfg.B = uniform_input_matrix(n);
  }
  cfg.strategy = strategy_from_string(kv.get_string("strategy", to_string(default_strategy)));
  cfg.dt = kv.get_double("dt", cfg.dt);
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be > 0");
  cfg.duration_s = kv.get_double("duration_s", cfg.duration_s);
  cfg.eval_start_s = kv.get_double("eval.start_s", cfg.eval_start_s);
  cfg.plant_memory_cap = kv.get_int("memory_cap", cfg.plant_memory_cap);
  {
    std::vector<double> seeds;
    for (const double s : kv.get_double_list("seeds", {1.0}))
      seeds.push_back(s);
    cfg.seeds.clear();
    for (const double s : seeds) {
      if (s < 0.0 || s != std::floor(s))
        throw ConfigError("seeds must be non-negative integers");
      cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (kv.has("init.x0")) {
    const std::vector<double> x0 = kv.get_double_list("init.x0", {});
    if (static_cast<Eigen::Index>(x0.size()) != n)
      throw ConfigError("init.x0 must list one value per channel");
    cfg.x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), n);
  }

  cfg.bursts_enabled = kv.get_bool("dist.enabled", true);
  cfg.bursts.amplitudes = kv.get_double_list("dist.amplitudes", cfg.bursts.amplitudes);
  cfg.bursts.mean_interarrivals_s =
      kv.get_double_list("dist.mean_interarrivals_s", cfg.bursts.mean_interarrivals_s);
  cfg.bursts.values_are_rates = kv.get_bool("dist.values_are_rates", false);
  cfg.bursts.burst_duration_s = kv.get_double("dist.burst_s", cfg.bursts.burst_duration_s);

  const std::string wf = kv.get_string("ol.waveform", "sinusoid");
  if (wf == "sinusoid") cfg.open_loop.waveform = OpenLoopConfig::Waveform::sinusoid;
  else if (wf == "biphasic_rect") cfg.open_loop.waveform = OpenLoopConfig::Waveform::biphasic_rect;
  else throw ConfigError("unknown ol.waveform '" + wf + "'");
  cfg.open_loop.amplitude = kv.get_double("ol.amplitude", cfg.open_loop.amplitude);
  cfg.open_loop.frequency_hz = kv.get_double("ol.frequency_hz", cfg.open_loop.frequency_hz);
  cfg.open_loop.phase = kv.get_double("ol.phase", cfg.open_loop.phase);
  cfg.open_loop.on_duration_s = kv.get_double("ol.on_s", cfg.open_loop.on_duration_s);
  cfg.open_loop.off_duration_s = kv.get_double("ol.off_s", cfg.open_loop.off_duration_s);
  cfg.open_loop.start_time_s = kv.get_double("ol.start_s", cfg.open_loop.start_time_s);

  cfg.detector.window_steps = kv.get_int("det.window_steps", cfg.detector.window_steps);
  cfg.detector.threshold = kv.get_double("det.threshold", 0.0);
  cfg.detector.refractory_steps = kv.get_int("det.refractory_steps", cfg.detector.refractory_steps);

  cfg.mpc.p = kv.get_int("mpc.p", cfg.mpc.p);
  cfg.mpc.P = kv.get_int("mpc.P", cfg.mpc.P);
  cfg.mpc.M = kv.get_int("mpc.M", cfg.mpc.M);
  cfg.mpc.q_weight = kv.get_double("mpc.q", cfg.mpc.q_weight);
  cfg.mpc.r_weight = kv.get_double("mpc.r", cfg.mpc.r_weight);
  cfg.mpc.solver_tol = kv.get_double("mpc.tol", cfg.mpc.solver_tol);
  cfg.mpc.solver_max_iter = kv.get_int("mpc.max_iter", cfg.mpc.solver_max_iter);
  const Eigen::Index n_u = cfg.B.cols();
  const double u_min = kv.get_double("mpc.u_min", -1.0);
  const double u_max = kv.get_double("mpc.u_max", 1.0);
  cfg.mpc.u_min = Eigen::VectorXd::Constant(n_u, u_min);
  cfg.mpc.u_max = Eigen::VectorXd::Constant(n_u, u_max);
  if (kv.has("mpc.c")) {
    const std::vector<double> c = kv.get_double_list("mpc.c", {});
    if (static_cast<Eigen::Index>(c.size()) != n)
      throw ConfigError("mpc.c must list one value per channel");
    cfg.mpc.c = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
  }
  try {
    cfg.mpc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("mpc settings: ") + e.what());
  }
  return cfg;
}

}  // namespace fosmpc
