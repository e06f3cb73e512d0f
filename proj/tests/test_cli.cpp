#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

struct TempDir {
  std::filesystem::path dir;
  TempDir() {
    std::random_device rd;
    dir = std::filesystem::temp_directory_path() /
          ("afop_cli_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(dir);
  }
  ~TempDir() { std::filesystem::remove_all(dir); }
  std::string file(const std::string& name) const { return (dir / name).string(); }
};

// Runs the installed binary with stdout+stderr captured; returns the exit code.
int run_cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(AFOP_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Wall-clock fields vary run to run; everything else in a report must not.
std::string strip_timing(std::string text) {
  static const std::regex timing(
      "\"(pretrain_wall_s|pretrain_wall_time_s|adapt_ms_per_episode)\"\\s*:\\s*[^,}\\n]*");
  return std::regex_replace(text, timing, "");
}

}  // namespace

TEST_CASE("parse errors exit with code 2") {
  TempDir td;
  const std::string log = td.file("log.txt");
  CHECK(run_cli("", log) == 2);
  CHECK(run_cli("eval --definitely-not-a-flag 1", log) == 2);
  CHECK(run_cli("eval --data x.tact --k-shot 0", log) == 2);
  CHECK(run_cli("synth --out x.tact --noise-sigma -0.5", log) == 2);
  CHECK(run_cli("eval --data x.tact --protocol bogus", log) == 2);
  CHECK(run_cli("no-such-subcommand", log) == 2);
}

TEST_CASE("help exits cleanly") {
  TempDir td;
  const std::string log = td.file("log.txt");
  CHECK(run_cli("--help", log) == 0);
  CHECK(slurp(log).find("synth") != std::string::npos);
}

TEST_CASE("missing input file exits with code 1") {
  TempDir td;
  const std::string log = td.file("log.txt");
  CHECK(run_cli("extract --data " + td.file("absent.tact") + " --out " + td.file("x.csv"),
                log) == 1);
  CHECK(slurp(log).find("error") != std::string::npos);
}

TEST_CASE("synth is seed-deterministic and writes the requested grid") {
  TempDir td;
  const std::string log = td.file("log.txt");
  const std::string a = td.file("a.tact"), b = td.file("b.tact"), c = td.file("c.tact");
  REQUIRE(run_cli("synth --out " + a + " --seed 5 --trials-per-class 4", log) == 0);
  CHECK(slurp(log).find("144 trials") != std::string::npos);
  REQUIRE(run_cli("synth --out " + b + " --seed 5 --trials-per-class 4", log) == 0);
  REQUIRE(run_cli("synth --out " + c + " --seed 6 --trials-per-class 4", log) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("extract writes one labeled row per trial") {
  TempDir td;
  const std::string log = td.file("log.txt");
  const std::string data = td.file("d.tact"), csv = td.file("f.csv");
  REQUIRE(run_cli("synth --out " + data + " --seed 1 --trials-per-class 3", log) == 0);
  REQUIRE(run_cli("extract --data " + data + " --out " + csv, log) == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("trial_id,class_id,shape_id,material,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 36 * 3);
  const std::string header = text.substr(0, text.find('\n'));
  CHECK(std::count(header.begin(), header.end(), ',') == 3 + 386);
}

TEST_CASE("eval smoke run writes a report that is byte-stable modulo timing") {
  TempDir td;
  const std::string log = td.file("log.txt");
  const std::string data = td.file("d.tact");
  REQUIRE(run_cli("synth --out " + data + " --seed 3 --trials-per-class 12", log) == 0);
  const std::string common = "eval --data " + data +
                             " --seed 11 --episodes 8 --n-way 3 --k-shot 2 --q-query 4"
                             " --steps 20 --nca-iters 2 --dscan-episodes 4 --report ";
  REQUIRE(run_cli(common + td.file("r1.json"), log) == 0);
  const std::string out = slurp(log);
  CHECK(out.find("closedSet") != std::string::npos);
  CHECK(out.find("3-way 2-shot") != std::string::npos);
  REQUIRE(run_cli(common + td.file("r2.json"), log) == 0);
  const std::string r1 = slurp(td.file("r1.json"));
  CHECK(strip_timing(r1) == strip_timing(slurp(td.file("r2.json"))));
  CHECK(r1 != strip_timing(r1));
  CHECK(r1.find("\"accuracy_mean\"") != std::string::npos);
}

TEST_CASE("pretrain writes a model and the scan curve") {
  TempDir td;
  const std::string log = td.file("log.txt");
  const std::string data = td.file("d.tact");
  REQUIRE(run_cli("synth --out " + data + " --seed 4 --trials-per-class 12", log) == 0);
  const std::string model = td.file("m.json"), curve = td.file("curve.csv");
  REQUIRE(run_cli("pretrain --data " + data + " --out " + model +
                      " --nca-iters 2 --dscan-episodes 4 --dscan-csv " + curve,
                  log) == 0);
  CHECK(slurp(model).find("\"ranking\"") != std::string::npos);
  const std::string text = slurp(curve);
  CHECK(text.rfind("D,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') >= 10);
}

TEST_CASE("report subcommand merges summaries into a table") {
  TempDir td;
  const std::string log = td.file("log.txt");
  const std::string data = td.file("d.tact");
  REQUIRE(run_cli("synth --out " + data + " --seed 9 --trials-per-class 12", log) == 0);
  const std::string r = td.file("r.json");
  REQUIRE(run_cli("eval --data " + data +
                      " --episodes 4 --n-way 2 --k-shot 1 --q-query 2 --steps 5"
                      " --nca-iters 2 --dscan-episodes 4 --report " + r,
                  log) == 0);
  const std::string table = td.file("t.csv");
  REQUIRE(run_cli("report --inputs " + r + " " + r + " --out " + table, log) == 0);
  const std::string text = slurp(table);
  CHECK(text.rfind("protocol", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
