#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "catnet/cli.hpp"
#include "catnet/config.hpp"
#include "catnet/io.hpp"

using namespace catnet;
namespace fs = std::filesystem;

namespace {

std::string fixture(const char* name) {
  for (const char* base : {"tests/data/", "../tests/data/", "../../tests/data/", "data/"}) {
    std::string p = std::string(base) + name;
    if (fs::exists(p)) return p;
  }
  return std::string("tests/data/") + name;
}

std::string tmp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("catnet_test_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

nlohmann::json parse_file(const std::string& path) {
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace

TEST_CASE("config loading: shipped fixture validates") {
  AppConfig cfg = load_config(fixture("hyper2.json"));
  REQUIRE(cfg.network.has_value());
  CHECK(cfg.network->d == 2);
  CHECK(cfg.network->edges.size() == 2);
  CHECK(cfg.seed == 7);
  CHECK(cfg.sim.n == 64);
  CHECK(cfg.checks.ids.size() == 2);
  REQUIRE(cfg.cir.has_value());
  CHECK(cfg.cir->b == doctest::Approx(1.0));
}

TEST_CASE("config loading: errors carry json paths") {
  SUBCASE("self-loop fails the structural hypothesis") {
    nlohmann::json doc = parse_file(fixture("hyper2.json"));
    doc["network"]["edges"] = {{1, 1}};
    try {
      parse_config(doc);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.json_path() == "/network/edges");
      CHECK(std::string(e.what()).find("self-catalysis") != std::string::npos);
    }
  }
  SUBCASE("missing gamma is a schema error naming the field") {
    nlohmann::json doc = parse_file(fixture("hyper2.json"));
    doc["network"].erase("gamma");
    try {
      parse_config(doc);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("gamma") != std::string::npos);
    }
  }
  SUBCASE("unknown fields are rejected") {
    nlohmann::json doc = parse_file(fixture("hyper2.json"));
    doc["networks"] = 1;
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    nlohmann::json doc2 = parse_file(fixture("hyper2.json"));
    doc2["sim"]["step"] = 3;
    CHECK_THROWS_AS(parse_config(doc2), ConfigError);
  }
  SUBCASE("negative boundary drift is caught by the coefficient hypothesis") {
    nlohmann::json doc = parse_file(fixture("hyper2.json"));
    doc["network"]["b"][0] = {{"kind", "const"}, {"value", -1.0}};
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
  SUBCASE("start point outside the state space") {
    nlohmann::json doc = parse_file(fixture("hyper2.json"));
    doc["sim"]["x0"] = {0.0, 0.0};
    try {
      parse_config(doc);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.json_path() == "/sim/x0");
    }
  }
  SUBCASE("unknown check id") {
    nlohmann::json doc = parse_file(fixture("hyper2.json"));
    doc["checks"]["ids"] = {"bogus"};
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
  }
}

TEST_CASE("expression fields load through the config") {
  nlohmann::json doc = parse_file(fixture("hyper2.json"));
  doc["network"]["gamma"][0] = {{"kind", "expr"}, {"text", "1 + x1/(1 + x1)"}};
  AppConfig cfg = parse_config(doc);
  std::vector<double> x{1.0, 1.0};
  CHECK((*cfg.network).gamma[0](x) == doctest::Approx(1.5));
  doc["network"]["gamma"][0] = {{"kind", "expr"}, {"text", "x9 + 1"}};
  CHECK_THROWS_AS(parse_config(doc), ConfigError);
}

TEST_CASE("config hash is stable under key reordering") {
  nlohmann::json a = nlohmann::json::parse(R"({"b": 1, "a": {"y": 2, "x": 3}})");
  nlohmann::json b = nlohmann::json::parse(R"({"a": {"x": 3, "y": 2}, "b": 1})");
  CHECK(config_hash(a) == config_hash(b));
  nlohmann::json c = nlohmann::json::parse(R"({"a": {"x": 3, "y": 2}, "b": 2})");
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("trajectory csv round trip") {
  TrajectoryBatch batch;
  batch.d = 2;
  batch.times = {0.0, 0.5, 1.0};
  batch.paths = {{0.0, 1.0, 0.25, 1.5, 0.5, 2.0}, {1.0, 1.0, 1.25, 0.5, 1.5, 0.125}};
  std::string csv = trajectories_to_csv(batch);
  TrajectoryBatch back = trajectories_from_csv(csv);
  CHECK(back.d == batch.d);
  REQUIRE(back.times.size() == batch.times.size());
  REQUIRE(back.paths.size() == batch.paths.size());
  for (std::size_t p = 0; p < batch.paths.size(); ++p)
    for (std::size_t i = 0; i < batch.paths[p].size(); ++i)
      CHECK(back.paths[p][i] == batch.paths[p][i]);
  // byte stability
  CHECK(trajectories_to_csv(back) == csv);
  CHECK(csv.find("path,t,x1,x2\n") == 0);
  CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("cli: list-checks and usage errors") {
  CHECK(cli_main({"list-checks"}) == 0);
  CHECK(cli_main({"frobnicate"}) == 2);
  CHECK(cli_main({}) == 2);
  CHECK(cli_main({"simulate", "--config", "/nonexistent.json"}) == 2);
  CHECK(cli_main({"density", "--config", fixture("hyper2.json"), "--grid", "bogus"}) == 2);
}

TEST_CASE("cli: density grid produces the full table") {
  std::string dir = tmp_dir("density");
  CHECK(cli_main({"density", "--config", fixture("cir.json"), "--out-dir", dir, "--grid",
                  "t=1,x=0..4:9,y=0..4:9"}) == 0);
  std::string csv = read_text_file(dir + "/density.csv");
  int rows = -1;  // header
  for (char c : csv)
    if (c == '\n') ++rows;
  CHECK(rows == 81);
  CHECK(fs::exists(dir + "/manifest.json"));
}

TEST_CASE("cli: simulate writes trajectories and a manifest referencing them") {
  std::string dir = tmp_dir("simulate");
  CHECK(cli_main({"simulate", "--config", fixture("hyper2.json"), "--out-dir", dir, "--paths",
                  "50"}) == 0);
  CHECK(fs::exists(dir + "/trajectories.csv"));
  nlohmann::json manifest = parse_file(dir + "/manifest.json");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["version"] == std::string(kToolVersion));
  bool references = false;
  for (const auto& o : manifest["outputs"])
    references |= o.get<std::string>().find("trajectories.csv") != std::string::npos;
  CHECK(references);
  // byte determinism of the data outputs across reruns
  std::string first = read_text_file(dir + "/trajectories.csv");
  std::string dir2 = tmp_dir("simulate2");
  CHECK(cli_main({"simulate", "--config", fixture("hyper2.json"), "--out-dir", dir2, "--paths",
                  "50"}) == 0);
  CHECK(read_text_file(dir2 + "/trajectories.csv") == first);
  // trajectory replay round trip
  TrajectoryBatch replay = trajectories_from_csv(first);
  CHECK(replay.d == 2);
  CHECK(replay.paths.size() == 50);
}

TEST_CASE("cli: verify runs the configured suite and reflects failures in the exit code") {
  std::string dir = tmp_dir("verify");
  int rc = cli_main({"verify", "--config", fixture("hyper2.json"), "--out-dir", dir});
  CHECK(rc == 0);
  nlohmann::json summary = parse_file(dir + "/verify_summary.json");
  CHECK(summary["all_pass"] == true);
  CHECK(summary["reports"].size() == 2);
  CHECK(fs::exists(dir + "/verify_summary.txt"));
}

TEST_CASE("cli: seed precedence (flag over config)") {
  std::string dir = tmp_dir("seedflag");
  CHECK(cli_main({"simulate", "--config", fixture("hyper2.json"), "--out-dir", dir, "--paths",
                  "4", "--seed", "99"}) == 0);
  nlohmann::json manifest = parse_file(dir + "/manifest.json");
  CHECK(manifest["seed"] == 99);
}

TEST_CASE("svg plot writer emits wellformed-looking markup") {
  PlotSeries s{"demo", {{0.0, 0.0}, {1.0, 1.0}, {2.0, 0.5}}};
  std::string svg = svg_line_plot("demo plot", {s});
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.0, 1.0, -3.25, 1e-17, 123456.789, 0.1}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}
