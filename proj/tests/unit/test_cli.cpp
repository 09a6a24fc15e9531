#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "doctest.h"
#include "wipt/harvester.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "wipt");
  std::ostringstream out, err;
  Result r;
  r.code = wipt::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("wipt_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const std::vector<std::string> kFig7 = {"re-region", "--model", "linear", "--k2", "0.5", "--h2", "12",
                                        "--power", "10", "--noise", "3"};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("re-region reports the ideal corner") {
  const auto r = run(kFig7);
  REQUIRE(r.code == 0);
  const auto j = r.json();
  CHECK(j.at("result").at("corner").at("rate").get<double>() == doctest::Approx(5.3576).epsilon(1e-4));
  CHECK(j.at("result").at("corner").at("energy").get<double>() == doctest::Approx(60.0));
  CHECK(j.at("command") == "re-region");
  CHECK(j.contains("wipt_version"));
  CHECK(j.at("config").at("h2") == 12.0);

  auto ts = kFig7;
  ts.insert(ts.end(), {"--arch", "ts", "--points", "5"});
  const auto t = run(ts).json();
  CHECK(t.at("result").at("arch") == "ts");
  CHECK(t.at("result").at("boundary").size() >= 2);
}

TEST_CASE("exit codes") {
  CHECK(run({"re-region", "--bogus", "1"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"re-region", "--power", "ten"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  const auto inf = run({"allocate", "--gains", "4,1", "--power", "1", "--noise", "1", "--method",
                        "modified", "--target", "9", "--model", "linear", "--k2", "1"});
  CHECK(inf.code == 1);
  CHECK(inf.err.find("infeasible") != std::string::npos);
  auto neg = kFig7;
  neg.insert(neg.end(), {"--seed", "-3"});
  CHECK(run(neg).code == 2);
  auto bad_power = kFig7;
  bad_power[8] = "-1";
  CHECK(run(bad_power).code == 1);
}

TEST_CASE("outputs go to files and unwritable paths fail") {
  TempDir dir;
  auto args = kFig7;
  const auto csv = (dir.path / "r.csv").string();
  const auto svg = (dir.path / "r.svg").string();
  const auto json = (dir.path / "r.json").string();
  args.insert(args.end(), {"--csv", csv, "--svg", svg, "--json", json, "--arch", "ps"});
  const auto r = run(args);
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  const std::string c = slurp(csv);
  CHECK(c.starts_with("# wipt "));
  CHECK(c.find("\nrate,energy,param\n") != std::string::npos);
  CHECK(c.find("\"h2\":12.0") != std::string::npos);
  CHECK(slurp(svg).find("<svg") != std::string::npos);
  CHECK(slurp(svg).find("h2") != std::string::npos);
  CHECK(nlohmann::json::parse(slurp(json)).at("result").at("arch") == "ps");

  auto bad = kFig7;
  bad.insert(bad.end(), {"--csv", (dir.path / "missing" / "x" / "r.csv").string()});
  CHECK(run(bad).code == 1);
}

TEST_CASE("config files, overrides and round trip") {
  TempDir dir;
  const auto cfg = dir.path / "c.json";
  std::ofstream(cfg) << R"({"model": "linear", "k2": 0.5, "h2": 12, "power": 10, "noise": 3})";
  const auto a = run({"re-region", "--config", cfg.string()});
  REQUIRE(a.code == 0);
  CHECK(a.json().at("result").at("corner").at("energy").get<double>() == doctest::Approx(60.0));

  const auto b = run({"re-region", "--config", cfg.string(), "--power", "5"});
  CHECK(b.json().at("config").at("power") == 5.0);
  CHECK(b.json().at("result").at("corner").at("energy").get<double>() == doctest::Approx(30.0));

  // the recorded config reproduces the run exactly
  const auto again = dir.path / "again.json";
  std::ofstream(again) << a.json().at("config").dump();
  CHECK(run({"re-region", "--config", again.string()}).out == a.out);

  std::ofstream(dir.path / "bad.json") << "{not json";
  CHECK(run({"re-region", "--config", (dir.path / "bad.json").string()}).code == 2);
  std::ofstream(dir.path / "typo.json") << R"({"pwoer": 1})";
  CHECK(run({"re-region", "--config", (dir.path / "typo.json").string()}).code == 2);
}

TEST_CASE("seed precedence and determinism") {
  const std::vector<std::string> rnd = {"re-region", "--model", "linear", "--k2", "0.5", "--subbands",
                                        "4",         "--paths", "5",      "--power", "1", "--noise", "0.1",
                                        "--points",  "8"};
  ::unsetenv("WIPT_SEED");
  const auto def = run(rnd);
  REQUIRE(def.code == 0);
  CHECK(def.json().at("config").at("seed") == 1);
  CHECK(run(rnd).out == def.out);

  ::setenv("WIPT_SEED", "7", 1);
  const auto env = run(rnd);
  CHECK(env.json().at("config").at("seed") == 7);
  CHECK(env.json().at("result") != def.json().at("result"));
  auto flag = rnd;
  flag.insert(flag.end(), {"--seed", "3"});
  CHECK(run(flag).json().at("config").at("seed") == 3);
  ::setenv("WIPT_SEED", "abc", 1);
  CHECK(run(rnd).code == 2);
  ::unsetenv("WIPT_SEED");

  // thread cap does not change the bytes
  auto one = rnd;
  one.insert(one.end(), {"--threads", "1"});
  auto four = rnd;
  four.insert(four.end(), {"--threads", "4"});
  const auto r1 = run(one).json();
  const auto r4 = run(four).json();
  CHECK(r1.at("result").dump() == r4.at("result").dump());
}

TEST_CASE("dBm inputs are converted to watts") {
  const auto r = run({"eval-harvester", "--model", "linear", "--e3", "0.5", "--p-rf-dbm", "0,10"});
  REQUIRE(r.code == 0);
  const auto pts = r.json().at("result").at("points");
  CHECK(pts[0].at("p_rf").get<double>() == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(pts[1].at("p_rf").get<double>() == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(pts[1].at("p_dc").get<double>() == doctest::Approx(5e-3).epsilon(1e-12));

  const auto p = run({"re-region", "--model", "linear", "--k2", "0.5", "--h2", "12", "--power-dbm",
                      "40", "--noise", "3"});
  CHECK(p.json().at("config").at("power").get<double>() == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("fit-sigmoid reads a measurement file") {
  TempDir dir;
  const wipt::SaturationParams s(5365.0, 0.2308e-3, 10.73e-3);
  const auto csv = dir.path / "m.csv";
  {
    std::ofstream f(csv);
    f << "p_rf_mw,p_dc_mw\n";
    for (int i = 0; i < 20; ++i) {
      const double x = s.b() * 0.05 * std::pow(200.0, i / 19.0);
      f << 1e3 * x << ',' << 1e3 * wipt::sigmoid_dc_power(x, s) << '\n';
    }
  }
  const auto r = run({"fit-sigmoid", "--input", csv.string(), "--input-units", "mW"});
  REQUIRE(r.code == 0);
  const auto j = r.json().at("result");
  CHECK(j.at("points") == 20);
  CHECK(j.at("a").get<double>() == doctest::Approx(5365.0).epsilon(0.01));
  CHECK(j.at("p_sat").get<double>() == doctest::Approx(10.73e-3).epsilon(0.01));
  CHECK(run({"fit-sigmoid", "--input", (dir.path / "none.csv").string()}).code == 1);
  CHECK(run({"fit-sigmoid", "--input", csv.string(), "--input-units", "furlongs"}).code == 2);
}

TEST_CASE("repro fig7 writes its files") {
  TempDir dir;
  const auto r = run({"repro", "fig7", "--out-dir", dir.path.string()});
  REQUIRE(r.code == 0);
  for (const char* name : {"fig7_ideal.csv", "fig7_ts.csv", "fig7_ps.csv", "fig7.svg", "fig7.json"}) {
    CHECK(fs::exists(dir.path / name));
    CHECK(r.out.find(name) != std::string::npos);
  }
  const auto j = nlohmann::json::parse(slurp(dir.path / "fig7.json"));
  CHECK(j.at("result").at("corner").at("rate").get<double>() == doctest::Approx(std::log2(41.0)));
  const std::string first = slurp(dir.path / "fig7_ps.csv");
  REQUIRE(run({"repro", "fig7", "--out-dir", dir.path.string()}).code == 0);
  CHECK(slurp(dir.path / "fig7_ps.csv") == first);
  CHECK(run({"repro", "fig99", "--out-dir", dir.path.string()}).code == 2);
}

}  // TEST_SUITE
