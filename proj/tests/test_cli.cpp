#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CliResult run_cli(const fs::path& dir, const std::string& args) {
  const fs::path out = dir / "_stdout.txt";
  const fs::path err = dir / "_stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" + DISTMFA_CLI_PATH "' " +
                          args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

double field(const std::string& text, const std::string& key) {
  const std::size_t at = text.find(key + " ");
  REQUIRE(at != std::string::npos);
  return std::stod(text.substr(at + key.size() + 1));
}

}  // namespace

TEST_CASE("cli pipeline runs simulate, ingest and mfa end to end") {
  const fs::path dir = testsupport::make_temp_dir("cli");

  CliResult sim = run_cli(dir, "simulate --seed 11 --units 8 --draws 300 -o micro.csv");
  REQUIRE(sim.code == 0);
  REQUIRE(fs::exists(dir / "micro.csv"));

  CliResult ing = run_cli(dir, "ingest micro.csv -o hist.json --quantiles 10");
  REQUIRE(ing.code == 0);
  CliResult reing = run_cli(dir, "ingest hist.json -o hist2.json");
  REQUIRE(reing.code == 0);
  CHECK(slurp(dir / "hist.json") == slurp(dir / "hist2.json"));

  CliResult mfa = run_cli(dir, "mfa hist.json -o rep --quantiles 10 --plots all");
  REQUIRE(mfa.code == 0);
  for (const char* name :
       {"eigenvalues.csv", "variable_scores.csv", "individual_scores.csv",
        "contributions.csv", "rv_matrix.csv", "model.json", "fan_1_2.svg",
        "circle_1_2.svg", "plane_y1_1_2.svg", "plane_y2_1_2.svg",
        "plane_mirrored_1_2.svg", "scree.svg"}) {
    INFO(name);
    CHECK(fs::exists(dir / "rep" / name));
  }

  const nlohmann::json model = nlohmann::json::parse(slurp(dir / "rep" / "model.json"));
  REQUIRE(model.contains("axes"));
  const std::vector<double> cum = model["axes"]["cumulative_percent"];
  CHECK(std::abs(cum.back() - 100.0) <= 1e-9);
  CHECK(model["units"].size() == 8);
  CHECK(model["degenerate_blocks"].empty());

  SECTION("a second run writes byte-identical reports") {
    CliResult again = run_cli(dir, "mfa hist.json -o rep2 --quantiles 10 --plots all");
    REQUIRE(again.code == 0);
    for (const auto& entry : fs::directory_iterator(dir / "rep")) {
      const fs::path other = dir / "rep2" / entry.path().filename();
      INFO(entry.path().filename().string());
      REQUIRE(fs::exists(other));
      CHECK(slurp(entry.path()) == slurp(other));
    }
  }

  SECTION("distance output satisfies the decomposition identity") {
    CliResult d = run_cli(dir, "distance micro.csv --unit-a u1 --unit-b u6 --variable y2");
    REQUIRE(d.code == 0);
    const double sq = field(d.out, "squared_distance");
    const double sum = field(d.out, "location") + field(d.out, "scale") +
                       field(d.out, "shape");
    CHECK(std::abs(sq - sum) <= 1e-9 * std::max(1.0, sq));
    CHECK(field(d.out, "rho") <= 1.0);
  }

  fs::remove_all(dir);
}

TEST_CASE("cli exit codes distinguish input faults from other failures") {
  const fs::path dir = testsupport::make_temp_dir("clierr");

  write_text(dir / "bad.csv", "unit,variable\nu1,y1\n");
  CHECK(run_cli(dir, "mfa bad.csv -o rep").code == 2);

  write_text(dir / "short.csv",
             "unit,variable,value\nu1,y1,1.0\nu1,y1,2.0\nu1,y2,1.0\nu2,y1,3.0\n");
  CliResult missing = run_cli(dir, "mfa short.csv -o rep");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("u2") != std::string::npos);
  CHECK(missing.err.find("y2") != std::string::npos);

  CliResult sim = run_cli(dir, "simulate --units 4 --draws 50 -o micro.csv");
  REQUIRE(sim.code == 0);
  CHECK(run_cli(dir, "distance micro.csv --unit-a u1 --unit-b u2 --variable zz").code == 1);
  CHECK(run_cli(dir, "mfa micro.csv -o rep --plots bogus").code == 2);
  CHECK(run_cli(dir, "mfa micro.csv -o rep --extremes bogus").code == 2);
  CHECK(run_cli(dir, "mfa nosuchfile.json -o rep").code == 1);
  CHECK(run_cli(dir, "mfa micro.csv -o rep --plane 2,2 --plots fan").code != 0);

  fs::remove_all(dir);
}

TEST_CASE("cli reads defaults from a config file and flags win") {
  const fs::path dir = testsupport::make_temp_dir("clicfg");

  REQUIRE(run_cli(dir, "simulate --units 5 --draws 80 -o micro.csv").code == 0);
  write_text(dir / "conf.ini", "[mfa]\nquantiles=6\nplots=scree\n");

  CliResult with_cfg = run_cli(dir, "mfa micro.csv -o rep --config conf.ini");
  REQUIRE(with_cfg.code == 0);
  CHECK(fs::exists(dir / "rep" / "scree.svg"));
  nlohmann::json model = nlohmann::json::parse(slurp(dir / "rep" / "model.json"));
  CHECK(model["blocks"][0]["quantile_count"] == 6);

  CliResult flag = run_cli(dir, "mfa micro.csv -o rep2 --config conf.ini --quantiles 9");
  REQUIRE(flag.code == 0);
  model = nlohmann::json::parse(slurp(dir / "rep2" / "model.json"));
  CHECK(model["blocks"][0]["quantile_count"] == 9);

  fs::remove_all(dir);
}
