#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "fosmpc/csv.hpp"
#include "fosmpc/experiment.hpp"
#include "fosmpc/svg.hpp"
#include "fosmpc/sysid.hpp"

namespace fosmpc {

struct ArtifactOptions {
  std::string out_dir = "out";
  std::string format = "csv";  // metrics format: csv | json
  bool traces = true;
  bool plots = true;
};

namespace detail {

inline void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory: " + dir);
}

inline nlohmann::json metrics_json(const RunMetrics& m) {
  return {{"seed", m.seed},
          {"energy_uncontrolled", m.energy_uncontrolled},
          {"energy_controlled", m.energy_controlled},
          {"energy_ratio", m.energy_ratio},
          {"input_energy", m.input_energy},
          {"max_abs_input", m.max_abs_input},
          {"trigger_count", m.trigger_count},
          {"burst_count", m.burst_count},
          {"solver_warning", m.solver_warning}};
}

}  // namespace detail

inline void check_metrics_format(const std::string& format) {
  if (format != "csv" && format != "json")
    throw ConfigError("format must be csv or json, got '" + format + "'");
}

inline void write_metrics(const ExperimentResult& result, const std::string& path,
                          const std::string& format) {
  check_metrics_format(format);
  if (format == "json") {
    nlohmann::json doc;
    doc["strategy"] = to_string(result.config.strategy);
    doc["median_energy_ratio"] = result.median_energy_ratio;
    doc["mean_energy_ratio"] = result.mean_energy_ratio;
    doc["any_solver_warning"] = result.any_solver_warning;
    doc["per_seed"] = nlohmann::json::array();
    for (const RunMetrics& m : result.per_seed) doc["per_seed"].push_back(detail::metrics_json(m));
    std::ofstream out(path);
    if (!out) throw DataError("cannot write metrics: " + path);
    out << doc.dump(2) << '\n';
    return;
  }
  Eigen::MatrixXd table(static_cast<Eigen::Index>(result.per_seed.size()), 9);
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    const RunMetrics& m = result.per_seed[static_cast<std::size_t>(r)];
    table(r, 0) = static_cast<double>(m.seed);
    table(r, 1) = m.energy_uncontrolled;
    table(r, 2) = m.energy_controlled;
    table(r, 3) = m.energy_ratio;
    table(r, 4) = m.input_energy;
    table(r, 5) = m.max_abs_input;
    table(r, 6) = m.trigger_count;
    table(r, 7) = m.burst_count;
    table(r, 8) = m.solver_warning ? 1.0 : 0.0;
  }
  write_matrix_csv(path, table,
                   {"seed", "energy_uncontrolled", "energy_controlled", "energy_ratio",
                    "input_energy", "max_abs_input", "trigger_count", "burst_count",
                    "solver_warning"});
}

// Per-seed trace CSVs and overlay plots plus one aggregate metrics file.
// Requires a result produced with keep_traces = true when traces or plots are
// requested.
inline void write_experiment_artifacts(const ExperimentResult& result,
                                       const ArtifactOptions& opt) {
  check_metrics_format(opt.format);
  detail::ensure_out_dir(opt.out_dir);
  const std::filesystem::path dir(opt.out_dir);
  const std::string strategy = to_string(result.config.strategy);
  if ((opt.traces || opt.plots) && result.runs.size() != result.per_seed.size())
    throw std::logic_error("write_experiment_artifacts: result lacks kept traces");
  for (std::size_t i = 0; i < result.runs.size() && (opt.traces || opt.plots); ++i) {
    const PairedRun& run = result.runs[i];
    const std::string seed_tag = "seed" + std::to_string(run.metrics.seed);
    if (opt.traces) {
      write_trace_csv((dir / ("trace_uncontrolled_" + seed_tag + ".csv")).string(),
                      run.uncontrolled);
      write_trace_csv((dir / ("trace_" + strategy + "_" + seed_tag + ".csv")).string(),
                      run.controlled);
    }
    if (opt.plots)
      write_overlay_svg((dir / ("overlay_" + seed_tag + ".svg")).string(),
                        run.uncontrolled.states, run.controlled.states, run.controlled.inputs);
  }
  const std::string metrics_name = opt.format == "json" ? "metrics.json" : "metrics.csv";
  write_metrics(result, (dir / metrics_name).string(), opt.format);
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  Eigen::MatrixXd table(static_cast<Eigen::Index>(rows.size()), 4);
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    const SweepRow& row = rows[static_cast<std::size_t>(r)];
    table(r, 0) = row.p;
    table(r, 1) = row.median_energy_ratio;
    table(r, 2) = row.mean_energy_ratio;
    table(r, 3) = row.wall_time_s;
  }
  write_matrix_csv(path, table, {"p", "median_energy_ratio", "mean_energy_ratio", "wall_time_s"});
}

inline void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV: " + path);
  out << "strategy,median_energy_ratio,mean_energy_ratio,mean_input_energy,max_abs_input,"
         "total_triggers\n";
  for (const CompareRow& row : rows) {
    out << to_string(row.strategy) << ',' << format_double(row.median_energy_ratio) << ','
        << format_double(row.mean_energy_ratio) << ',' << format_double(row.mean_input_energy)
        << ',' << format_double(row.max_abs_input) << ',' << row.total_triggers << '\n';
  }
}

inline void write_model_json(const IdentificationResult& result, const std::string& path) {
  nlohmann::json doc;
  const FosModel& m = result.model;
  doc["A"] = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.A.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.A.cols(); ++c) row.push_back(m.A(r, c));
    doc["A"].push_back(row);
  }
  doc["alpha"] = std::vector<double>(m.alpha.data(), m.alpha.data() + m.alpha.size());
  doc["sigma_w2"] = m.sigma_w2;
  doc["residual_rss"] = result.residual_rss;
  doc["alpha_grid_step"] = result.alpha_grid_step;
  doc["passes"] = result.passes;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model: " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace fosmpc
