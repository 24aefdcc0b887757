#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "slcb_cli_test";

int slcb(const std::string& args) {
  const std::string cmd = std::string("\"") + SLCB_CLI + "\" " + args + " > " +
                          (kScratch / "stdout.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string output() {
  std::ifstream in(kScratch / "stdout.txt");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config(const char* name) { return std::string(SLCB_CONFIG_DIR) + "/" + name; }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("validate prints the fingerprint") {
  fs::remove_all(kScratch);
  fs::create_directories(kScratch);
  CHECK(slcb("validate --config " + config("smoke.json")) == 0);
  CHECK(output().rfind("ok ", 0) == 0);
  CHECK(output().size() == 3 + 16 + 1);
}

TEST_CASE("invalid configs exit 1 and name the field") {
  fs::create_directories(kScratch);
  const fs::path bad = kScratch / "bad.json";
  write(bad, R"({"environment": {"dim": 2, "num_arms": 0, "horizon": 10},
                 "mechanism": {"kind": "ggtm"}, "arms": {"strategy": "truthful"}})");
  CHECK(slcb("validate --config " + bad.string()) == 1);
  CHECK(output().find("environment.num_arms") != std::string::npos);
  write(bad, "{ not json");
  CHECK(slcb("run --config " + bad.string() + " --out " + (kScratch / "r").string()) == 1);
  CHECK(slcb("validate --config " + (kScratch / "missing.json").string()) == 1);
  CHECK(slcb("") == 1);
  CHECK(slcb("run") == 1);
}

TEST_CASE("run then emit-plotdata") {
  fs::create_directories(kScratch);
  const fs::path res = kScratch / "res", plots = kScratch / "plots";
  CHECK(slcb("run --config " + config("smoke.json") + " --out " + res.string() +
             " --jobs 2 --seed 11 --runs-ignored") == 1);
  CHECK(slcb("run --config " + config("smoke.json") + " --out " + res.string() +
             " --jobs 2 --seed 11") == 0);
  CHECK(fs::exists(res / "rounds.csv"));
  CHECK(fs::exists(res / "summary.json"));
  CHECK(slcb("emit-plotdata " + res.string() + " --out " + plots.string()) == 0);
  CHECK(fs::exists(plots / "regret_by_epoch.csv"));

  const fs::path other = kScratch / "other";
  CHECK(slcb("run --config " + config("smoke.json") + " --out " + other.string() +
             " --seed 12") == 0);
  CHECK(slcb("emit-plotdata " + res.string() + " " + other.string() + " --out " +
             plots.string()) == 1);
  CHECK(output().find("fingerprint") != std::string::npos);
}

TEST_CASE("runtime failures exit 2") {
  CHECK(slcb("run --config " + config("smoke.json") + " --out /dev/null/sub") == 2);
}

TEST_CASE("check-ne") {
  fs::create_directories(kScratch);
  const fs::path out = kScratch / "ne";
  CHECK(slcb("check-ne --config " + config("ne_tiny_exact.json") + " --out " + out.string()) ==
        0);
  CHECK(fs::exists(out / "ne_report.json"));
  CHECK(slcb("check-ne --config " + config("smoke.json") + " --out " + out.string()) == 1);
}
