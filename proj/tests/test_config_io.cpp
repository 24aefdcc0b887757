#include "slcb/config.hpp"
#include "slcb/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace slcb;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("slcb_config_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Json small_config(std::uint64_t seed = 3, int runs = 2) {
  Json j = Json::parse(R"({
    "environment": {"dim": 2, "num_arms": 2, "horizon": 60},
    "mechanisms": [{"kind": "ggtm"}, {"kind": "optgtm"}],
    "arms": [{"strategy": "epoch_gradient"}, {"strategy": "myopic"}]
  })");
  j["experiment"] = {{"epochs", 2}, {"runs", runs}, {"master_seed", seed}};
  return j;
}

std::string field_of(const Json& j) {
  try {
    parse_config(j);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("number formatting is shortest round-trip") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  const double tiny = 1.2345e-300;
  CHECK(std::stod(format_number(tiny)) == tiny);
}

TEST_CASE("canonical json round trips through the parser") {
  for (const char* name : {"smoke.json", "epoch_dynamics.json", "ggtm_adversaries.json",
                           "greedy_myopic.json", "ne_ggtm.json", "ne_tiny_exact.json"}) {
    const ExperimentConfig c = load_config(std::string(SLCB_CONFIG_DIR) + "/" + name);
    const Json once = to_json(c);
    const Json twice = to_json(parse_config(once));
    CHECK_MESSAGE(once.dump() == twice.dump(), name);
    CHECK(config_fingerprint(c) == config_fingerprint(parse_config(once)));
    CHECK(config_fingerprint(c).size() == 16);
  }
}

TEST_CASE("config errors name the field") {
  Json j = small_config();
  j["environment"]["num_arms"] = 0;
  CHECK(field_of(j) == "environment.num_arms");

  j = small_config();
  j["environment"]["horizon"] = -5;
  CHECK(field_of(j) == "environment.horizon");

  j = small_config();
  j["environment"]["colour"] = "red";
  CHECK(field_of(j) == "environment.colour");

  j = small_config();
  j["arms"].push_back(Json{{"strategy", "truthful"}});
  CHECK(field_of(j) == "arms");

  j = small_config();
  j["mechanisms"][1]["kind"] = "auction";
  CHECK(field_of(j).rfind("mechanisms", 0) == 0);

  j = small_config();
  j["mechanisms"][0]["delta"] = 0.0;
  CHECK(field_of(j).find("delta") != std::string::npos);
}

TEST_CASE("fingerprints separate configs that differ in any field") {
  const ExperimentConfig a = parse_config(small_config(3));
  const ExperimentConfig b = parse_config(small_config(4));
  CHECK(config_fingerprint(a) != config_fingerprint(b));
}

TEST_CASE("run output is identical across reruns and job counts") {
  const ExperimentConfig c = parse_config(small_config());
  std::ostringstream log;
  const fs::path a = scratch("a"), b = scratch("b");
  cmd_run(c, a.string(), 1, log);
  cmd_run(c, b.string(), 3, log);
  for (const char* f : {"rounds.csv", "summary.json", "config_echo.json"}) {
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  }
  CHECK_FALSE(fs::exists(a / ".rounds_parts"));

  const auto rows = lines(slurp(a / "rounds.csv"));
  CHECK(rows[0] == "# config_fingerprint=" + config_fingerprint(c));
  CHECK(rows[1] ==
        "mechanism,run,epoch,t,arm,reward,instantaneous_regret,cumulative_regret,"
        "active_count,manipulation_this_round");
  // 2 mechanisms x 2 runs x 2 epochs x 60 rounds
  CHECK(rows.size() == 2 + 480);

  const Json summary = Json::parse(slurp(a / "summary.json"));
  CHECK(summary["config_fingerprint"] == config_fingerprint(c));
  CHECK(summary["runs"].size() == 4);
  CHECK(summary["aggregate"]["ggtm"]["regret_by_epoch"].size() == 2);
}

TEST_CASE("plot data from one run has zero standard error") {
  const ExperimentConfig c = parse_config(small_config(5, 1));
  std::ostringstream log;
  const fs::path res = scratch("single"), plots = scratch("single_plots");
  cmd_run(c, res.string(), 1, log);
  cmd_emit_plotdata({res.string()}, plots.string(), log);
  for (const char* f : {"regret_by_epoch.csv", "manipulation_and_utility.csv",
                        "regret_vs_t_epoch0.csv", "regret_vs_t_final.csv"}) {
    REQUIRE(fs::exists(plots / f));
    CHECK(lines(slurp(plots / f))[0] == "# config_fingerprint=" + config_fingerprint(c));
  }
  const auto rows = lines(slurp(plots / "regret_by_epoch.csv"));
  REQUIRE(rows.size() == 2 + 4);
  CHECK(rows[1] == "mechanism,epoch,regret_mean,regret_stderr,runs");
  const Json summary = Json::parse(slurp(res / "summary.json"));
  for (std::size_t k = 2; k < rows.size(); ++k) {
    CHECK(rows[k].substr(rows[k].rfind(',') - 2) == ",0,1");
  }
  const double regret0 = summary["runs"][0]["epochs"][0]["regret"];
  CHECK(rows[2] == "ggtm,0," + format_number(regret0) + ",0,1");
}

TEST_CASE("plot data refuses mixed fingerprints and duplicate runs") {
  std::ostringstream log;
  const fs::path a = scratch("mix_a"), b = scratch("mix_b"), out = scratch("mix_out");
  cmd_run(parse_config(small_config(1, 1)), a.string(), 1, log);
  cmd_run(parse_config(small_config(2, 1)), b.string(), 1, log);
  CHECK_THROWS_AS(cmd_emit_plotdata({a.string(), b.string()}, out.string(), log),
                  ValidationError);
  CHECK_THROWS_AS(cmd_emit_plotdata({a.string(), a.string()}, out.string(), log),
                  ValidationError);
  CHECK_THROWS_AS(cmd_emit_plotdata({(out / "nothing").string()}, out.string(), log),
                  ValidationError);
}

TEST_CASE("check-ne writes a report") {
  ExperimentConfig c = load_config(std::string(SLCB_CONFIG_DIR) + "/ne_tiny_exact.json");
  std::ostringstream log;
  const fs::path out = scratch("ne");
  cmd_check_ne(c, out.string(), 1, log);
  const Json rep = Json::parse(slurp(out / "ne_report.json"));
  CHECK(rep["config_fingerprint"] == config_fingerprint(c));
  CHECK(log.str().find("claim_one") != std::string::npos);

  c.check_ne.reset();
  CHECK_THROWS_AS(cmd_check_ne(c, out.string(), 1, log), ValidationError);
}
