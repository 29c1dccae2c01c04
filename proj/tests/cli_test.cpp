#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string cli = FOSMPC_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = cli + " " + args + " > /dev/null 2>> cli_test_out/stderr.log";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch() {
  const fs::path dir("cli_test_out");
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kShortRun =
    "duration_s = 2\n"
    "seeds = 1\n";

}  // namespace

TEST_CASE("help requests succeed") {
  scratch();
  REQUIRE(run("--help") == 0);
  REQUIRE(run("experiment3 --help") == 0);
  REQUIRE(run("identify --help") == 0);
}

TEST_CASE("bad invocations exit with the usage code") {
  scratch();
  REQUIRE(run("") == 2);                       // a subcommand is required
  REQUIRE(run("no_such_command") == 2);
  REQUIRE(run("simulate --format xml") == 2);  // not csv|json
  REQUIRE(run("identify") == 2);               // --data is required
  REQUIRE(run("simulate --config /no/such/file.cfg") == 2);
}

TEST_CASE("unreadable data files exit with the data code") {
  scratch();
  REQUIRE(run("identify --data /no/such/data.csv") == 3);
  const fs::path bad = scratch() / "bad_data.csv";
  write_file(bad, "1,2,3,4\nx,y,z,w\n");
  REQUIRE(run("identify --data " + bad.string()) == 3);
}

TEST_CASE("undersized identification data is a config problem") {
  const fs::path tiny = scratch() / "tiny.csv";
  write_file(tiny, "1,2,3,4\n5,6,7,8\n");
  REQUIRE(run("identify --data " + tiny.string()) == 2);  // needs far more samples
}

TEST_CASE("the bounded predictive-control experiment produces its artifacts") {
  const fs::path dir = scratch();
  const fs::path cfg = dir / "short.cfg";
  write_file(cfg, kShortRun);
  const fs::path out = dir / "exp3";
  REQUIRE(run("experiment3 --config " + cfg.string() + " --out " + out.string()) == 0);
  REQUIRE(fs::exists(out / "metrics.csv"));
  REQUIRE(fs::exists(out / "trace_mpc_seed1.csv"));
  REQUIRE(fs::exists(out / "trace_uncontrolled_seed1.csv"));
  REQUIRE(fs::exists(out / "overlay_seed1.svg"));
  const std::string metrics = read_file(out / "metrics.csv");
  REQUIRE(metrics.rfind("seed,energy_uncontrolled,", 0) == 0);
}

TEST_CASE("repeated runs are byte-identical") {
  const fs::path dir = scratch();
  const fs::path cfg = dir / "short.cfg";
  write_file(cfg, kShortRun);
  const fs::path out1 = dir / "rep1";
  const fs::path out2 = dir / "rep2";
  REQUIRE(run("experiment3 --config " + cfg.string() + " --out " + out1.string()) == 0);
  REQUIRE(run("experiment3 --config " + cfg.string() + " --out " + out2.string()) == 0);
  for (const char* name : {"metrics.csv", "trace_mpc_seed1.csv",
                           "trace_uncontrolled_seed1.csv", "overlay_seed1.svg"})
    REQUIRE(read_file(out1 / name) == read_file(out2 / name));
}

TEST_CASE("metrics can be written as json") {
  const fs::path dir = scratch();
  const fs::path cfg = dir / "short.cfg";
  write_file(cfg, kShortRun);
  const fs::path out = dir / "json_out";
  REQUIRE(run("simulate --config " + cfg.string() + " --out " + out.string() +
              " --format json") == 0);
  REQUIRE(fs::exists(out / "metrics.json"));
  const std::string doc = read_file(out / "metrics.json");
  REQUIRE(doc.rfind("{", 0) == 0);
  REQUIRE(doc.find("\"median_energy_ratio\"") != std::string::npos);
  REQUIRE(doc.find("\"strategy\": \"none\"") != std::string::npos);
}

TEST_CASE("seed lists on the command line override the config") {
  const fs::path dir = scratch();
  const fs::path cfg = dir / "short.cfg";
  write_file(cfg, kShortRun);
  const fs::path out = dir / "seeds_out";
  REQUIRE(run("experiment1 --config " + cfg.string() + " --seed 5,6 --out " +
              out.string()) == 0);
  REQUIRE(fs::exists(out / "trace_open_loop_seed5.csv"));
  REQUIRE(fs::exists(out / "trace_open_loop_seed6.csv"));
  REQUIRE_FALSE(fs::exists(out / "trace_open_loop_seed1.csv"));
}

TEST_CASE("the memory sweep writes its table") {
  const fs::path dir = scratch();
  const fs::path cfg = dir / "sweep.cfg";
  write_file(cfg, "duration_s = 1\nseeds = 1\n");
  const fs::path out = dir / "sweep_out";
  REQUIRE(run("sweep --config " + cfg.string() + " --p 1,2 --out " + out.string()) == 0);
  const std::string table = read_file(out / "sweep.csv");
  REQUIRE(table.rfind("p,median_energy_ratio,mean_energy_ratio,wall_time_s", 0) == 0);
  REQUIRE(table.find("\n1,") != std::string::npos);
  REQUIRE(table.find("\n2,") != std::string::npos);
}

TEST_CASE("the strategy comparison writes one row per strategy") {
  const fs::path dir = scratch();
  const fs::path cfg = dir / "cmp.cfg";
  write_file(cfg, "duration_s = 1\nseeds = 1\n");
  const fs::path out = dir / "cmp_out";
  REQUIRE(run("compare --config " + cfg.string() + " --out " + out.string()) == 0);
  const std::string table = read_file(out / "compare.csv");
  REQUIRE(table.find("open_loop,") != std::string::npos);
  REQUIRE(table.find("event_triggered,") != std::string::npos);
  REQUIRE(table.find("mpc,") != std::string::npos);
}

TEST_CASE("identification emits a model description") {
  const fs::path dir = scratch();
  // simple AR(1)-style series long enough for a 2-lag fit on one channel
  std::string csv;
  double x = 0.3;
  for (int k = 0; k < 400; ++k) {
    csv += std::to_string(x) + "\n";
    x = 0.8 * x + ((k * 2654435761u) % 1000 / 1000.0 - 0.5);
  }
  const fs::path data = dir / "series.csv";
  write_file(data, csv);
  const fs::path cfgp = dir / "id.cfg";
  write_file(cfgp, "id.p_fit = 2\nid.passes = 1\n");
  const fs::path out = dir / "id_out";
  REQUIRE(run("identify --data " + data.string() + " --channels 1 --config " +
              cfgp.string() + " --out " + out.string()) == 0);
  const std::string model = read_file(out / "model.json");
  REQUIRE(model.find("\"alpha\"") != std::string::npos);
  REQUIRE(model.find("\"sigma_w2\"") != std::string::npos);
}

TEST_CASE("unknown config keys warn but do not fail") {
  const fs::path dir = scratch();
  const fs::path cfg = dir / "typo.cfg";
  write_file(cfg, std::string(kShortRun) + "not_a_real_key = 1\n");
  const fs::path errlog = dir / "warn.log";
  const std::string cmd = cli + " simulate --config " + cfg.string() + " --out " +
                          (dir / "typo_out").string() + " > /dev/null 2> " + errlog.string();
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  REQUIRE(WEXITSTATUS(rc) == 0);
  REQUIRE(read_file(errlog).find("unknown config key 'not_a_real_key'") != std::string::npos);
}
