#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hypergibbs/cli.hpp"

using namespace hypergibbs;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli_run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "hypergibbs_cli_test";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("certify prints the verdict") {
  auto r = run({"certify", "--model", "independent_set", "--lambda", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("PsdForAlpha(1)\n", 0) == 0);
  auto line = r.out.substr(r.out.find('\n') + 1);
  auto j = nlohmann::json::parse(line);
  CHECK(j["verdict"] == "psd_for_alpha");
  CHECK(j.contains("method"));

  auto ferro = run({"certify", "--model", "ising", "--beta", "0.5"});
  CHECK(ferro.code == 1);
  CHECK(ferro.out.rfind("NoAlphaExists", 0) == 0);
}

TEST_CASE("logz of a free Potts model") {
  auto r = run({"logz", "--model", "potts", "--q", "3", "--beta", "0", "--n", "4", "--c", "1", "--exact"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["logz"].get<double>() == doctest::Approx(4 * std::log(3.0)).epsilon(1e-12));
  CHECK(j["method"] == "exact");
  CHECK_FALSE(j.contains("se"));

  auto mc = run({"logz", "--model", "potts", "--q", "3", "--beta", "0", "--n", "4", "--c", "1", "--samples", "50"});
  REQUIRE(mc.code == 0);
  auto jm = nlohmann::json::parse(mc.out);
  CHECK(jm["method"] == "mc");
  CHECK(jm["logz"].get<double>() == doctest::Approx(4 * std::log(3.0)));
  CHECK(jm.contains("se"));
}

TEST_CASE("usage errors and help") {
  CHECK(run({"logz", "--bogus"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"certify", "--model", "nope"}).code == 2);
  CHECK(run({"certify", "--model", "potts", "--q", "3", "--beta", "-1"}).code == 2);
  auto h = run({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("interpolate") != std::string::npos);
}

TEST_CASE("model show and gen") {
  auto show = run({"model", "show", "--model", "potts", "--q", "2", "--beta", "1"});
  REQUIRE(show.code == 0);
  auto j = nlohmann::json::parse(show.out);
  CHECK(j["soft_state"]["alpha"].get<double>() == doctest::Approx(std::exp(1.0)));
  CHECK(j["soft_state_ok"] == true);

  auto gen = run({"gen", "--model", "ksat", "--k", "3", "--beta", "1", "--n", "10", "--c", "1.5", "--seed", "4"});
  REQUIRE(gen.code == 0);
  auto g = nlohmann::json::parse(gen.out);
  CHECK(g["n"] == 10);
  CHECK(g["k"] == 3);
  CHECK(g["edges"].size() == 15);
  CHECK(run({"gen", "--model", "ksat", "--k", "3", "--beta", "1", "--n", "10", "--c", "1.5", "--seed", "4"}).out ==
        gen.out);
}

TEST_CASE("records, csv and replay") {
  auto jsonl = scratch("records.jsonl");
  auto csv = scratch("records.csv");
  auto r = run({"moments", "--model", "independent_set", "--lambda", "1", "--n", "3", "--n1", "1", "--r", "2",
                "--samples", "3", "--c", "1", "--seed", "9", "--out", jsonl.string(), "--csv", csv.string()});
  CHECK(r.code == 0);
  auto i = run({"interpolate", "--model", "independent_set", "--lambda", "1", "--n", "6", "--n1", "3", "--c", "1",
                "--samples", "30", "--seed", "2", "--out", jsonl.string(), "--workers", "1"});
  CHECK(i.code == 0);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("experiment,verdict", 0) == 0);

  auto rep = run({"replay", "--in", jsonl.string(), "--workers", "2"});
  CHECK(rep.code == 0);
  CHECK(rep.out == "moments: identical\ninterpolate: identical\n");
}

TEST_CASE("config file input") {
  auto cfg = scratch("model.json");
  {
    std::ofstream f(cfg);
    f << R"({"model": "viana_bray", "params": {"beta": 0.5, "k": 2}, "seed": 3})";
  }
  auto r = run({"certify", "--config", cfg.string()});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("PsdForAlpha(", 0) == 0);
}

TEST_CASE("installed binary runs") {
  auto path = scratch("binary.txt");
  const std::string cmd =
      std::string(HYPERGIBBS_CLI_PATH) + " certify --model independent_set --lambda 1 > " + path.string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "PsdForAlpha(1)");
}
