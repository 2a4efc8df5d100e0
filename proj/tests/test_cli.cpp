#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(MVSDE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "mvsde_test_cli";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli exit codes") {
  const auto dir = scratch();
  const auto out = " --out " + dir.string();
  const auto ok = write(dir / "ok.json", R"({"scenario": "reflected-drift", "scheme": {"N": 4}})");
  const auto bad = write(dir / "bad.json", R"({"scenario": "reflected-drift", "scheme": {"h": 0}})");
  const auto contraction = write(dir / "c.json", R"({"scenario": "contraction", "scheme": {"N": 10}})");
  CHECK(run("scenarios") == 0);
  CHECK(run("--bogus-flag") == 2);
  CHECK(run("simulate") == 2);
  CHECK(run("simulate --config " + bad + out) == 2);
  CHECK(run("simulate --config " + ok + " --set scheme.N=oops" + out) == 2);
  CHECK(run("simulate --config " + ok + " --seed 7" + out) == 0);
  CHECK(run("stability --config " + contraction + out) == 0);
  CHECK(run("stability --config " + contraction + " --set stability.lyapunov.alpha=3" + out) == 1);
  CHECK(slurp(dir / "stability_report.json").find("dissipativity_check") != std::string::npos);
  CHECK(run("picard --config " + contraction + " --set picard.max_iter=1 --set picard.tol=1e-300" + out) == 0);
}

TEST_CASE("cli reflected drift final position") {
  const auto dir = scratch();
  const auto cfg = write(dir / "r.json", R"({"scenario": "reflected-drift", "scheme": {"N": 2, "T": 0.5}})");
  REQUIRE(run("simulate --config " + cfg + " --seed 7 --out " + dir.string()) == 0);
  std::istringstream csv(slurp(dir / "trajectory.csv"));
  std::string line, last;
  while (std::getline(csv, line))
    if (!line.empty()) last = line;
  // t,particle_id,x_1,...
  const auto c1 = last.find(','), c2 = last.find(',', c1 + 1), c3 = last.find(',', c2 + 1);
  CHECK(std::stod(last.substr(0, c1)) == doctest::Approx(0.5));
  CHECK(std::abs(std::stod(last.substr(c2 + 1, c3 - c2 - 1)) - 0.5) <= 1e-12);
}

TEST_CASE("cli threads do not change output") {
  const auto dir = scratch();
  const auto cfg = write(dir / "m.json", R"({"scenario": "mean-field-ou", "scheme": {"N": 200, "T": 0.3}})");
  REQUIRE(run("simulate --config " + cfg + " --threads 1 --out " + (dir / "a").string()) == 0);
  REQUIRE(run("simulate --config " + cfg + " --threads 8 --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "trajectory.csv") == slurp(dir / "b" / "trajectory.csv"));
}
