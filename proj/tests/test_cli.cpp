#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

using nlohmann::json;

namespace {

namespace fs = std::filesystem;
const fs::path kData = TEST_DATA_DIR;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "forkgame");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = forkgame::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "forkgame_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const json& j) {
  const fs::path path = scratch_dir() / name;
  std::ofstream(path) << j.dump();
  return path.string();
}

json two_pool_config(double theta, double tau = 0.5) {
  return {{"network", {{"lambda", 0.1}, {"tau", tau}, {"reward", 1200}, {"theta", theta}}},
          {"market", {{"omega", {30, 20}}, {"miners", 5000}, {"cost", 0.01}}},
          {"population", {{"initial", {0.6, 0.4}}}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(invoke({}).code == 1);
  CHECK(invoke({"nonsense"}).code == 1);
  CHECK(invoke({"analytic"}).code == 1);
  CHECK(invoke({"analytic", "--config", (scratch_dir() / "absent.json").string()}).code == 2);
  CHECK(invoke({"gini", "--blocks", (scratch_dir() / "absent.csv").string()}).code == 2);

  const auto bad_key = write_config("bad_key.json", json{{"network", {{"lambda", 0.1}, {"tau", 1}, {"reward", 1},
                                                                      {"theta", 0}, {"speed", 3}}},
                                                         {"market", {{"hash_fractions", {0.5, 0.5}}}}});
  const auto r = invoke({"analytic", "--config", bad_key});
  CHECK(r.code == 1);
  CHECK(r.err.find("speed") != std::string::npos);

  const auto bad_theta = write_config("bad_theta.json", two_pool_config(1.5));
  CHECK(invoke({"equilibrium", "--config", bad_theta}).code == 1);
  CHECK(invoke({"simulate", "--config", write_config("sim.json", two_pool_config(0)), "--tie", "maybe"}).code == 1);

  std::ofstream(scratch_dir() / "broken.json") << "{ not json";
  CHECK(invoke({"analytic", "--config", (scratch_dir() / "broken.json").string()}).code == 1);
}

TEST_CASE("equilibrium without fork penalty reports the closed form") {
  const auto cfg = write_config("limit.json", two_pool_config(1.0 - 1e-9));
  const auto r = invoke({"equilibrium", "--config", cfg, "--quiet"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["r_star"].get<double>() == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(j["witness"]["theorem"] == 4);
  CHECK(j["witness"]["case"] == 3);
  CHECK(j["schema_version"] == 1);
  CHECK(j["config"]["network"]["theta"].get<double>() == doctest::Approx(1.0 - 1e-9));

  const auto inv = invoke({"equilibrium", "--config", cfg, "--invasion", "--quiet"});
  REQUIRE(inv.code == 0);
  CHECK(inv.out.find("ess_confirmed") != std::string::npos);
}

TEST_CASE("analytic output at zero delay") {
  const auto cfg = write_config("zero.json", two_pool_config(0.0, 0.0));
  const auto r = invoke({"analytic", "--config", cfg, "--output", "json", "--quiet"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  for (const auto& p : j["pools"]) {
    CHECK(p["uncle"].get<double>() == 0.0);
    CHECK(p["ratio"].get<double>() == 1.0);
  }
  const auto table = invoke({"analytic", "--config", cfg});
  CHECK(table.code == 0);
  CHECK(table.out.find("ratio") != std::string::npos);
  CHECK(table.err.find("resolved config") != std::string::npos);
  CHECK(invoke({"analytic", "--config", cfg, "--quiet"}).err.empty());
}

TEST_CASE("simulate is reproducible and writes traces") {
  const auto cfg = write_config("sim.json", two_pool_config(0.0, 5.0));
  const auto a = invoke({"simulate", "--config", cfg, "--blocks", "5000", "--seed", "9", "--quiet"});
  const auto b = invoke({"simulate", "--config", cfg, "--blocks", "5000", "--seed", "9", "--quiet"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto j = json::parse(a.out);
  std::uint64_t won = 0;
  for (const auto& p : j["pools"]) {
    won += p["blocks_won"].get<std::uint64_t>();
    CHECK(p.contains("uncles"));
    CHECK(p.contains("forks_involved"));
    CHECK(p.contains("forks_lost"));
    CHECK(p.contains("reward"));
  }
  CHECK(won == 5000);
  CHECK(j["seed"] == 9);

  const fs::path trace = scratch_dir() / "trace";
  fs::remove_all(trace);
  REQUIRE(invoke({"simulate", "--config", cfg, "--blocks", "2000", "--trace-dir", trace.string(), "--quiet"}).code ==
          0);
  const auto stats = invoke({"stats", "--blocks", (trace / "blocks.csv").string(), "--forks",
                             (trace / "forks.csv").string(), "--output", "json", "--quiet"});
  REQUIRE(stats.code == 0);
  CHECK(json::parse(stats.out)["bins"].size() == 5);
}

TEST_CASE("sweep output is reproducible and goes to a file with a config sidecar") {
  const auto cfg = write_config("sweep.json", two_pool_config(0.0));
  const fs::path out = scratch_dir() / "sweep.csv";
  fs::remove(out);
  fs::remove(out.string() + ".config.json");
  REQUIRE(invoke({"sweep", "--config", cfg, "--tau", "0:2:3", "--theta", "0:1:2", "--out", out.string()}).code == 0);
  const auto first = slurp(out);
  REQUIRE(invoke({"sweep", "--config", cfg, "--tau", "0:2:3", "--theta", "0:1:2", "--out", out.string()}).code == 0);
  CHECK(slurp(out) == first);
  CHECK(first.rfind("tau,theta,r_1,r_2,gini,method,status\n", 0) == 0);
  CHECK(std::count(first.begin(), first.end(), '\n') == 7);
  CHECK(fs::exists(out.string() + ".config.json"));

  // The echoed config reproduces the run.
  const auto again = invoke({"sweep", "--config", out.string() + ".config.json", "--quiet"});
  REQUIRE(again.code == 0);
  CHECK(again.out == first);
}

TEST_CASE("evolve and config round trip") {
  const auto cfg = write_config("evolve.json", two_pool_config(0.0));
  const auto r = invoke({"evolve", "--config", cfg, "--output", "json", "--quiet"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["converged"] == true);
  CHECK(j["terminal"][1].get<double>() > 0.65);
  const auto echoed = write_config("echoed.json", j["config"]);
  const auto r2 = invoke({"evolve", "--config", echoed, "--output", "json", "--quiet"});
  REQUIRE(r2.code == 0);
  CHECK(json::parse(r2.out)["terminal"] == j["terminal"]);

  const auto csv = invoke({"evolve", "--config", cfg, "--quiet", "--tmax", "50"});
  CHECK(csv.out.rfind("t,r_1,r_2\n", 0) == 0);
}

TEST_CASE("chain data commands") {
  const auto blocks = (kData / "blocks.csv").string();
  const auto forks = (kData / "forks.csv").string();
  const auto g = invoke({"gini", "--blocks", blocks, "--top", "10", "--output", "json", "--quiet"});
  REQUIRE(g.code == 0);
  const auto j = json::parse(g.out);
  CHECK(j["gini"].get<double>() > 0.0);
  CHECK(j["inputs"]["blocks"] == blocks);
  const auto h = invoke({"branches", "--forks", forks, "--quiet"});
  CHECK(h.code == 0);
  const auto s = invoke({"stats", "--blocks", blocks, "--forks", forks, "--quiet"});
  CHECK(s.code == 0);
  CHECK(s.out.find("Uncle rate") != std::string::npos);

  std::ofstream(scratch_dir() / "orphan.csv") << "height,miner,status\n1,A,orphan\n2,A,canonical\n";
  const auto orphan = (scratch_dir() / "orphan.csv").string();
  CHECK(invoke({"gini", "--blocks", orphan}).code == 0);
  CHECK(invoke({"gini", "--blocks", orphan, "--strict"}).code == 1);
}
