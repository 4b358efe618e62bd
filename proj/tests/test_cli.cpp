#include <filesystem>
#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "nanoqmc/cli.hpp"
#include "nanoqmc/errors.hpp"
#include "nanoqmc/run_config.hpp"

using namespace nanoqmc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nanoqmc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(std::vector<std::string> args, std::string* log_out = nullptr) {
  std::ostringstream log;
  const int code = run_cli(args, log);
  if (log_out) *log_out = log.str();
  return code;
}

std::map<std::string, std::string> data_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() != "manifest.json") out[e.path().filename().string()] = slurp(e.path());
  }
  return out;
}

std::vector<std::string> with_out(const fs::path& dir, std::vector<std::string> args) {
  std::vector<std::string> full{"--out", dir.string()};
  full.insert(full.end(), args.begin(), args.end());
  return full;
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig cfg = RunConfig::parse("# header\nomega = 1.5  # trailing\n\nlist = 0, 1,2.5\nname=A\n", "run.cfg");
  RunConfig c = cfg;
  CHECK(c.number("omega", 0.0) == 1.5);
  CHECK(c.list("list", {}) == std::vector<double>{0.0, 1.0, 2.5});
  CHECK(c.text("name", "") == "A");
  CHECK(c.number("missing", 4.0) == 4.0);
  CHECK(c.where("omega") == "run.cfg:2");
  CHECK(c.where("missing") == "default");
  CHECK(c.resolved().at("missing") == "4");

  auto message = [](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message([] { RunConfig::parse("a = 1\na = 2\n", "f"); }).find("f:2") != std::string::npos);
  CHECK(message([] { RunConfig::parse("a 1\n", "f"); }).find("f:1") != std::string::npos);
  CHECK(message([] { RunConfig::parse("bad key = 1\n", "f"); }).find("invalid key") != std::string::npos);
  CHECK(message([] { RunConfig::parse("a =\n", "f"); }).find("no value") != std::string::npos);
  CHECK(message([] {
          RunConfig x = RunConfig::parse("\nomega = fast\n", "g");
          x.number("omega", 1.0);
        }).find("g:2") != std::string::npos);
  CHECK(message([] {
          RunConfig x = RunConfig::parse("n = 2.5\n", "g");
          x.integer("n", 1);
        }).find("integer") != std::string::npos);
  CHECK(message([] {
          RunConfig x = RunConfig::parse("l = 1,,2\n", "g");
          x.list("l", {});
        }).find("list") != std::string::npos);
  CHECK(message([] {
          RunConfig x = RunConfig::parse("s = -1\n", "g");
          x.unsigned_integer("s", 1);
        }).find("unsigned") != std::string::npos);
  CHECK(message([] {
          RunConfig x = RunConfig::parse("zap = 1\n", "g");
          x.restrict_to({"omega"}, "g2");
        }).find("g:1: unknown key 'zap'") != std::string::npos);

  RunConfig o = RunConfig::parse("omega = 1\n", "f");
  o.set_override("omega=3");
  CHECK(o.number("omega", 0.0) == 3.0);
  CHECK(o.where("omega") == "--set omega");
  CHECK_THROWS_AS(o.set_override("omega"), ConfigError);
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("digest") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("analytic command output") {
  const fs::path dir = scratch("analytic");
  REQUIRE(run(with_out(dir, {"analytic", "--set", "delta12_list=0,2,10", "--set", "t_max=50", "--set", "dt_out=0.01"})) == 0);
  std::ifstream in(dir / "analytic.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "delta12,t,Pee,Pprod");
  std::map<double, std::vector<double>> curves;
  while (std::getline(in, line)) {
    double d, t, pee, prod;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &d, &t, &pee, &prod) == 4);
    if (t == 0.0) CHECK(pee < 1e-20);
    if (d == 0.0) CHECK(std::abs(pee - prod) < 1e-10);
    curves[d].push_back(pee);
  }
  REQUIRE(curves.size() == 3);
  // First local maximum reaching 90% of the curve's peak.
  auto rise = [](const std::vector<double>& v) {
    const double top = *std::max_element(v.begin(), v.end());
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
      if (v[k] >= 0.9 * top && v[k] >= v[k - 1] && v[k] > v[k + 1]) return static_cast<double>(k);
    }
    return -1.0;
  };
  CHECK(rise(curves[0.0]) < rise(curves[2.0]));
  CHECK(rise(curves[2.0]) < rise(curves[10.0]));

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["version"] == kToolVersion);
  CHECK(manifest["command"] == "analytic");
  CHECK(manifest["outputs"]["analytic.csv"] == "sha256:" + sha256_hex(slurp(dir / "analytic.csv")));
  CHECK(manifest["config"]["t_max"] == "50");
  CHECK(manifest["config"]["omega"] == "1");
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  std::string log;
  CHECK(run(with_out(dir, {"g2", "--set", "nonsense=1"}), &log) == kExitConfig);
  CHECK(log.find("unknown key 'nonsense'") != std::string::npos);
  CHECK(run(with_out(dir, {"g2", "--set", "gamma12=1.5"}), &log) == kExitConfig);
  CHECK(log.find("gamma12") != std::string::npos);
  CHECK(run(with_out(dir, {"g2", "--set", "dt=0.3", "--set", "duration_one=100", "--set", "segments=1"}), &log) ==
        kExitNumerical);
  CHECK(run(with_out(dir, {"tip-map", "--set", "geometry=C"}), &log) == kExitConfig);
  CHECK(run(with_out(dir, {"tip-map", "--set", "r_tip=300"}), &log) == kExitConfig);
  CHECK(run({"frobnicate"}, &log) == kExitConfig);
  CHECK(run({}, &log) == kExitConfig);
  CHECK(run(with_out(dir, {"--config", (dir / "absent.cfg").string(), "analytic"}), &log) == kExitConfig);

  std::ofstream(dir / "bad.cfg") << "omega = 1\nomega = 2\n";
  CHECK(run(with_out(dir, {"--config", (dir / "bad.cfg").string(), "analytic"}), &log) == kExitConfig);
  CHECK(log.find("bad.cfg:2") != std::string::npos);
}

TEST_CASE("config file and overrides") {
  const fs::path dir = scratch("cfgfile");
  std::ofstream(dir / "run.cfg") << "# analytic settings\nomega = 2\nt_max = 1\ndt_out = 0.5\n";
  REQUIRE(run(with_out(dir / "out", {"--config", (dir / "run.cfg").string(), "--set", "t_max=2", "analytic"})) == 0);
  const std::string csv = slurp(dir / "out" / "analytic.csv");
  // Three deltas, five time points each, plus the header.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(manifest["config"]["omega"] == "2");
  CHECK(manifest["config"]["t_max"] == "2");
}

TEST_CASE("every command is deterministic for a fixed seed") {
  const std::vector<std::vector<std::string>> commands = {
      {"analytic"},
      {"g2", "--set", "duration_one=400", "--set", "segments=4", "--set", "delta12=3", "--set", "gamma12=0.5",
       "--set", "export_trajectories=1"},
      {"sweep", "--set", "duration_one=200", "--set", "segments=2", "--set", "delta12_list=0,5",
       "--set", "gamma12_list=-0.5,0.5"},
      {"tip-map", "--set", "r_steps=5", "--set", "theta_steps=7", "--set", "geometry=A"},
      {"tip-experiment", "--set", "n_one=3", "--set", "n_two=2", "--set", "duration=200"},
  };
  for (const auto& cmd : commands) {
    CAPTURE(cmd.front());
    const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
    std::vector<std::string> args_a{"--seed", "11", "--out", a.string()};
    std::vector<std::string> args_b{"--seed", "11", "--out", b.string()};
    std::vector<std::string> args_c{"--seed", "11", "--threads", "3", "--out", c.string()};
    for (auto* v : {&args_a, &args_b, &args_c}) v->insert(v->end(), cmd.begin(), cmd.end());
    REQUIRE(run(args_a) == 0);
    REQUIRE(run(args_b) == 0);
    REQUIRE(run(args_c) == 0);
    const auto fa = data_files(a), fb = data_files(b), fc = data_files(c);
    CHECK(!fa.empty());
    CHECK(fa == fb);
    CHECK(fa == fc);
    const auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
    const auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
    CHECK(ma["outputs"] == mb["outputs"]);
    CHECK(ma["derived_seeds"] == mb["derived_seeds"]);
    CHECK(ma["master_seed"] == 11);
  }
}

TEST_CASE("different seeds give different trajectories") {
  const fs::path a = scratch("seed_a"), b = scratch("seed_b");
  const std::vector<std::string> cmd{"g2", "--set", "duration_one=300", "--set", "segments=1"};
  auto args_a = with_out(a, cmd), args_b = with_out(b, cmd);
  args_a.insert(args_a.begin(), {"--seed", "1"});
  args_b.insert(args_b.begin(), {"--seed", "2"});
  REQUIRE(run(args_a) == 0);
  REQUIRE(run(args_b) == 0);
  CHECK(slurp(a / "g2.csv") != slurp(b / "g2.csv"));
}

TEST_CASE("command outputs carry the documented headers") {
  const fs::path dir = scratch("headers");
  REQUIRE(run(with_out(dir, {"tip-map", "--set", "r_steps=3", "--set", "theta_steps=3"})) == 0);
  CHECK(slurp(dir / "tip_map.csv").rfind("r_nm,theta_deg,gamma12_over_gamma0,delta12_over_gamma0,valid\n", 0) == 0);
  REQUIRE(run(with_out(dir, {"sweep", "--set", "duration_one=100", "--set", "segments=1", "--set", "delta12_list=0"})) == 0);
  CHECK(slurp(dir / "sweep.csv").rfind("delta12,gamma12,g2_zero,brightness\n", 0) == 0);
  REQUIRE(run(with_out(dir, {"g2", "--set", "duration_one=100", "--set", "segments=1", "--set", "export_trajectories=1"})) == 0);
  CHECK(slurp(dir / "g2.csv").rfind("tau,g2,counts,sigma\n", 0) == 0);
  CHECK(slurp(dir / "trajectory_one.csv").rfind("time,channel\n", 0) == 0);
  const auto summary = nlohmann::json::parse(slurp(dir / "g2_summary.json"));
  for (const char* key : {"g2_zero", "mean_rate", "brightness", "total_photons", "duration"}) CHECK(summary.contains(key));
  REQUIRE(run(with_out(dir, {"tip-experiment", "--set", "n_one=2", "--set", "n_two=1", "--set", "duration=100"})) == 0);
  CHECK(slurp(dir / "tip_sites.csv").rfind("x_nm,y_nm,z_nm\n", 0) == 0);
  const auto tip = nlohmann::json::parse(slurp(dir / "tip_experiment.json"));
  for (const char* key : {"R_1A", "R_2A", "R_mix", "brightness", "g2_zero_one", "g2_zero_two", "g2_zero_mix"}) {
    CHECK(tip.contains(key));
  }
}
