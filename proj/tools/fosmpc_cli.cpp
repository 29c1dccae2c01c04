#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "fosmpc/artifacts.hpp"
#include "fosmpc/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "out";
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "key = value configuration file");
  cmd->add_option("--seed", o.seeds, "seed list, e.g. --seed 1,2,3")->delimiter(',');
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--format", o.format, "metrics file format")
      ->check(CLI::IsMember({"csv", "json"}));
}

fosmpc::KeyValueConfig load_kv(const CommonOpts& o) {
  return o.config_path.empty() ? fosmpc::KeyValueConfig{}
                               : fosmpc::KeyValueConfig::from_file(o.config_path);
}

void warn_unknown(const fosmpc::KeyValueConfig& kv) {
  for (const std::string& key : kv.unknown_keys())
    std::cerr << "warning: unknown config key '" << key << "' ignored\n";
}

fosmpc::ExperimentConfig build_config(const CommonOpts& o, fosmpc::Strategy default_strategy,
                                      bool pin_strategy) {
  const fosmpc::KeyValueConfig kv = load_kv(o);
  fosmpc::ExperimentConfig cfg = fosmpc::experiment_config_from_kv(kv, default_strategy);
  if (pin_strategy) cfg.strategy = default_strategy;
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  warn_unknown(kv);
  return cfg;
}

int run_experiment_command(const CommonOpts& o, fosmpc::Strategy default_strategy,
                           bool pin_strategy) {
  const fosmpc::ExperimentConfig cfg = build_config(o, default_strategy, pin_strategy);
  const fosmpc::ExperimentResult result = fosmpc::run_experiment(cfg, true);

  fosmpc::ArtifactOptions opt;
  opt.out_dir = o.out_dir;
  opt.format = o.format;
  fosmpc::write_experiment_artifacts(result, opt);

  int triggers = 0;
  double max_u = 0.0;
  for (const fosmpc::RunMetrics& m : result.per_seed) {
    triggers += m.trigger_count;
    max_u = std::max(max_u, m.max_abs_input);
  }
  std::cout << "strategy             " << to_string(result.config.strategy) << '\n'
            << "seeds                " << result.per_seed.size() << '\n'
            << "median energy_ratio  " << fosmpc::format_double(result.median_energy_ratio)
            << '\n'
            << "mean energy_ratio    " << fosmpc::format_double(result.mean_energy_ratio) << '\n'
            << "max |u|              " << fosmpc::format_double(max_u) << '\n'
            << "total triggers       " << triggers << '\n'
            << "artifacts            " << o.out_dir << '/' << '\n';
  if (result.any_solver_warning) {
    std::cerr << "warning: the box-QP solver did not reach tolerance on every plan\n";
    return 4;
  }
  return 0;
}

int run_sweep_command(const CommonOpts& o, std::vector<int> p_values) {
  const fosmpc::KeyValueConfig kv = load_kv(o);
  fosmpc::ExperimentConfig cfg = fosmpc::experiment_config_from_kv(kv, fosmpc::Strategy::mpc);
  cfg.strategy = fosmpc::Strategy::mpc;
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (p_values.empty()) {
    for (const double p : kv.get_double_list("sweep.p_values", {1, 4, 8, 16}))
      p_values.push_back(static_cast<int>(p));
  }
  warn_unknown(kv);

  const std::vector<fosmpc::SweepRow> rows = fosmpc::sweep_memory(cfg, p_values);
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) throw fosmpc::DataError("cannot create output directory: " + o.out_dir);
  fosmpc::write_sweep_csv(rows, (std::filesystem::path(o.out_dir) / "sweep.csv").string());
  std::cout << "p  median_energy_ratio  wall_time_s\n";
  for (const fosmpc::SweepRow& row : rows)
    std::cout << row.p << "  " << fosmpc::format_double(row.median_energy_ratio) << "  "
              << fosmpc::format_double(row.wall_time_s) << '\n';
  return 0;
}

int run_compare_command(const CommonOpts& o) {
  const fosmpc::KeyValueConfig kv = load_kv(o);
  fosmpc::ExperimentConfig cfg = fosmpc::experiment_config_from_kv(kv, fosmpc::Strategy::mpc);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  warn_unknown(kv);

  const std::vector<fosmpc::Strategy> strategies = {fosmpc::Strategy::open_loop,
                                                    fosmpc::Strategy::event_triggered,
                                                    fosmpc::Strategy::mpc};
  const std::vector<fosmpc::CompareRow> rows = fosmpc::compare_strategies(cfg, strategies);
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) throw fosmpc::DataError("cannot create output directory: " + o.out_dir);
  fosmpc::write_compare_csv(rows, (std::filesystem::path(o.out_dir) / "compare.csv").string());
  std::cout << "strategy          median_energy_ratio\n";
  for (const fosmpc::CompareRow& row : rows)
    std::cout << to_string(row.strategy) << "  " << fosmpc::format_double(row.median_energy_ratio)
              << '\n';
  return 0;
}

int run_identify_command(const CommonOpts& o, const std::string& data_path, int channels) {
  const fosmpc::KeyValueConfig kv = load_kv(o);
  Eigen::MatrixXd data = fosmpc::ingest_eeg_csv(data_path, channels);
  if (kv.get_bool("model.normalize", true)) data = fosmpc::normalize(data).first;
  fosmpc::AlphaGrid grid;
  grid.lo = kv.get_double("id.alpha_lo", grid.lo);
  grid.hi = kv.get_double("id.alpha_hi", grid.hi);
  grid.step = kv.get_double("id.alpha_step", grid.step);
  const int p_fit = kv.get_int("id.p_fit", 512);
  const int passes = kv.get_int("id.passes", 3);
  warn_unknown(kv);

  fosmpc::IdentificationResult result;
  try {
    result = fosmpc::identify(data, p_fit, grid, passes);
  } catch (const std::invalid_argument& e) {
    throw fosmpc::ConfigError(std::string("identification: ") + e.what());
  }
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) throw fosmpc::DataError("cannot create output directory: " + o.out_dir);
  fosmpc::write_model_json(result, (std::filesystem::path(o.out_dir) / "model.json").string());

  std::cout << "samples    " << data.rows() << '\n';
  std::cout << "alpha     ";
  for (Eigen::Index i = 0; i < result.model.alpha.size(); ++i)
    std::cout << ' ' << fosmpc::format_double(result.model.alpha[i]);
  std::cout << '\n'
            << "sigma_w2   " << fosmpc::format_double(result.model.sigma_w2) << '\n'
            << "model      " << o.out_dir << "/model.json" << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation and predictive control of fractional-order neural dynamics"};
  app.require_subcommand(1);

  CommonOpts sim_o, e1_o, e2_o, e3_o, sweep_o, cmp_o, id_o;
  std::vector<int> sweep_p;
  std::string id_data;
  int id_channels = 4;

  CLI::App* sim = app.add_subcommand("simulate", "run the configured strategy once");
  add_common(sim, sim_o);
  CLI::App* e1 = app.add_subcommand(
      "experiment1", "periodic open-loop stimulation against disturbance bursts");
  add_common(e1, e1_o);
  CLI::App* e2 = app.add_subcommand(
      "experiment2", "line-length-triggered stimulation against disturbance bursts");
  add_common(e2, e2_o);
  CLI::App* e3 =
      app.add_subcommand("experiment3", "receding-horizon predictive control with input bounds");
  add_common(e3, e3_o);
  CLI::App* sweep = app.add_subcommand("sweep", "controller memory sweep over p");
  add_common(sweep, sweep_o);
  sweep->add_option("--p", sweep_p, "predictive-model orders to sweep")->delimiter(',');
  CLI::App* cmp = app.add_subcommand("compare", "score all strategies on shared seeds");
  add_common(cmp, cmp_o);
  CLI::App* id = app.add_subcommand("identify", "fit a fractional-order model from a CSV");
  add_common(id, id_o);
  id->add_option("--data", id_data, "sample CSV, one column per channel")->required();
  id->add_option("--channels", id_channels, "number of channels in the CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(sim))
      return run_experiment_command(sim_o, fosmpc::Strategy::none, false);
    if (app.got_subcommand(e1))
      return run_experiment_command(e1_o, fosmpc::Strategy::open_loop, true);
    if (app.got_subcommand(e2))
      return run_experiment_command(e2_o, fosmpc::Strategy::event_triggered, true);
    if (app.got_subcommand(e3))
      return run_experiment_command(e3_o, fosmpc::Strategy::mpc, true);
    if (app.got_subcommand(sweep)) return run_sweep_command(sweep_o, sweep_p);
    if (app.got_subcommand(cmp)) return run_compare_command(cmp_o);
    if (app.got_subcommand(id)) return run_identify_command(id_o, id_data, id_channels);
  } catch (const fosmpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const fosmpc::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
