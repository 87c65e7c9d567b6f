#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tajima/cli.hpp"
#include "tajima/io.hpp"

using namespace tajima;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

auto run(std::vector<std::string> args) -> Result {
  args.insert(args.begin(), "tajima");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

auto scratch(const std::string& name) -> fs::path {
  auto p = fs::temp_directory_path() / ("tajima_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"bogus"}).code == kExitUsage);
  CHECK(run({"simulate", "--scenario", "drop"}).code == kExitUsage);
  auto dir = scratch("usage");
  CHECK(run({"simulate", "--scenario", "nope", "--out", dir.string()}).code == kExitUsage);
  CHECK(run({"count", "--y1", (dir / "missing.csv").string(), "--y2", "x"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("simulate, count and infer") {
  auto dir = scratch("pipeline");
  auto sim = run({"simulate", "--scenario", "drop", "--n", "5,3", "--s", "0,0.3", "--mu", "4",
                  "--seed", "3", "--loci", "2", "--out", dir.string()});
  REQUIRE(sim.code == kExitOk);
  for (auto f : {"y1_1.csv", "y2_1.csv", "y1_2.csv", "y2_2.csv", "genealogy_1.json", "truth.csv",
                 "simulation.json"})
    CHECK(fs::exists(dir / f));
  CHECK(read_file((dir / "y1_1.csv").string()).rfind("# tajima simulate seed=3 config_hash=", 0) == 0);
  auto again = scratch("pipeline2");
  run({"simulate", "--scenario", "drop", "--n", "5,3", "--s", "0,0.3", "--mu", "4", "--seed", "3",
       "--loci", "2", "--out", again.string()});
  CHECK(read_file((dir / "y1_2.csv").string()) == read_file((again / "y1_2.csv").string()));

  auto cnt = run({"count", "--y1", (dir / "y1_1.csv").string(), "--y2", (dir / "y2_1.csv").string(),
                  "--N", "200", "--resolution", "kingman"});
  REQUIRE(cnt.code == kExitOk);
  auto cj = nlohmann::json::parse(cnt.out);
  CHECK(cj["mean"].get<double>() > 0.0);
  CHECK(cj["add"] == cj["c"]);

  write(dir / "config.json", R"({"version": 1, "iterations": 400, "burnin": 100, "thin": 10, "B": 10})");
  auto out = dir / "run";
  auto inf = run({"infer", "--config", (dir / "config.json").string(), "--y1",
                  (dir / "y1_1.csv").string(), "--y2", (dir / "y2_1.csv").string(), "--y1",
                  (dir / "y1_2.csv").string(), "--y2", (dir / "y2_2.csv").string(), "--seed", "9",
                  "--out", out.string()});
  INFO(inf.err);
  REQUIRE(inf.code == kExitOk);
  for (auto f : {"samples.ndjson", "summary.csv", "trajectory.svg", "run.json"}) CHECK(fs::exists(out / f));
  std::ifstream nd(out / "samples.ndjson");
  std::string first, line;
  std::getline(nd, first);
  CHECK(nlohmann::json::parse(first)["metadata"]["seed"] == 9);
  int n = 0;
  while (std::getline(nd, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j["per_locus"].size() == 2);
    ++n;
  }
  CHECK(n == 30);
  CHECK(read_file((out / "trajectory.svg").string()).find("<svg") == 0);

  auto sum = run({"summarize", "--samples", (out / "samples.ndjson").string(), "--truth", "drop",
                  "--k", "20", "--out", (dir / "sum").string()});
  REQUIRE(sum.code == kExitOk);
  auto mj = nlohmann::json::parse(sum.out);
  CHECK(mj.contains("SRE"));
  CHECK(mj["ENV"].get<double>() >= 0.0);
  CHECK(mj.contains("ess_tmrca"));
  CHECK(fs::exists(dir / "sum" / "metrics.json"));

  auto two = run({"infer", "--config", (dir / "config.json").string(), "--y1",
                  (dir / "y1_1.csv").string(), "--y2", (dir / "y2_1.csv").string(), "--chains", "2",
                  "--out", (dir / "two").string()});
  REQUIRE(two.code == kExitOk);
  CHECK(fs::exists(dir / "two" / "samples_chain2.ndjson"));
  CHECK(read_file((dir / "two" / "samples_chain1.ndjson").string()) !=
        read_file((dir / "two" / "samples_chain2.ndjson").string()));
}

TEST_CASE("data and configuration errors") {
  auto dir = scratch("errors");
  write(dir / "y1.csv", "haplotype,a,b\nh1,1,1\nh2,1,0\nh3,0,1\nh4,0,0\n");
  write(dir / "y2.csv", "haplotype,0\nh1,1\nh2,1\nh3,1\nh4,1\n");
  auto r = run({"infer", "--y1", (dir / "y1.csv").string(), "--y2", (dir / "y2.csv").string(),
                "--iterations", "10", "--out", (dir / "o").string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("infinite sites") != std::string::npos);
  write(dir / "bad.json", R"({"version": 1, "nonsense": 3})");
  write(dir / "y1.csv", "haplotype,a\nh1,1\nh2,0\n");
  write(dir / "y2.csv", "haplotype,0\nh1,1\nh2,2\n");
  CHECK(run({"infer", "--config", (dir / "bad.json").string(), "--y1", (dir / "y1.csv").string(),
             "--y2", (dir / "y2.csv").string(), "--out", (dir / "o").string()})
            .code == kExitUsage);
  write(dir / "y2.csv", "haplotype,0\nh1,x\nh2,2\n");
  CHECK(run({"count", "--y1", (dir / "y1.csv").string(), "--y2", (dir / "y2.csv").string()}).code ==
        kExitData);
  write(dir / "s.ndjson", "{\"iteration\": 1}\n");
  CHECK(run({"summarize", "--samples", (dir / "s.ndjson").string()}).code == kExitData);
}

TEST_CASE("likelihood validation command") {
  auto r = run({"validate-likelihood", "--preset", "supp-a", "--draws", "20000", "--replicates", "1",
                "--M", "2", "--floor", "20", "--resolution", "tajima"});
  REQUIRE(r.code == kExitOk);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["results"][0]["mean_ratio"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(run({"validate-likelihood", "--preset", "supp-z"}).code == kExitUsage);
}

TEST_CASE("installed binary exit codes") {
  const char* exe = std::getenv("TAJIMA_CLI");
  if (!exe) return;
  CHECK(std::system((std::string(exe) + " --help > /dev/null").c_str()) == 0);
  auto dir = scratch("binary");
  write(dir / "y1.csv", "haplotype,a\nh1,1\nh2,0\n");
  write(dir / "y2.csv", "haplotype,0\nh1,x\nh2,2\n");
  const std::string cmd = std::string(exe) + " count --y1 " + (dir / "y1.csv").string() + " --y2 " +
                          (dir / "y2.csv").string() + " 2> /dev/null";
  const int st = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(st) == kExitData);
}
