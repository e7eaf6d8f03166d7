#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "freqalloc/error.hpp"
#include "freqalloc/experiment.hpp"

using namespace freqalloc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json small_static() {
  return Json::parse(R"({
    "name": "tiny",
    "experiment": "static",
    "topology": {"kind": "ula", "n": 12},
    "r": 2,
    "replicas": 2,
    "base_seed": 5,
    "initial_assignment": "uniform_random"
  })");
}

fs::path scratch(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("freqalloc_unit_" + tag);
  fs::remove_all(dir);
  return dir;
}

std::string error_of(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config errors name the field") {
  Json doc = small_static();
  doc.erase("base_seed");
  CHECK(error_of(doc).find("/base_seed") != std::string::npos);

  doc = small_static();
  doc["scheduler"] = {{"kind", "poisson"}, {"delta_t", -1.0}};
  CHECK(error_of(doc).find("/scheduler/delta_t") != std::string::npos);

  doc = small_static();
  doc["colour"] = "blue";
  CHECK(error_of(doc).find("colour") != std::string::npos);

  doc = small_static();
  doc["alpha"] = 0.5;
  CHECK(error_of(doc).find("/alpha") != std::string::npos);

  doc = small_static();
  doc["name"] = "../x";
  CHECK(error_of(doc).find("/name") != std::string::npos);

  doc = small_static();
  doc["topology"]["kind"] = "rectangular";
  CHECK_FALSE(error_of(doc).empty());  // lattices need four bands

  doc = small_static();
  CHECK(error_of(doc).empty());
}

TEST_CASE("broken config files report a position") {
  const auto dir = scratch("broken");
  fs::create_directories(dir);
  const auto path = dir / "bad.json";
  std::ofstream(path) << "{\n  \"name\": ,\n}\n";
  try {
    load_config(path);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config(dir / "missing.json"), std::ios_base::failure);
}

TEST_CASE("every preset parses and validates") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto cfg = parse_config(preset(name));
    CHECK(cfg.name == name);
    CHECK_NOTHROW(validate_config(cfg));
    // Echo then re-parse is a fixed point.
    CHECK(dump_json(config_to_json(parse_config(config_to_json(cfg)))) == dump_json(config_to_json(cfg)));
  }
  CHECK_THROWS_AS(preset("fig9"), ValidationError);
}

TEST_CASE("stability checks in validation") {
  const auto fig5 = validate_config(parse_config(preset("fig5")));
  CHECK(fig5.derived["stability_margin"].get<double>() == 0.0);
  CHECK(fig5.warnings.empty());

  Json doc = preset("fig5");
  doc["alpha"] = 0.5;
  const auto half = validate_config(parse_config(doc));
  CHECK(half.derived["stability_margin"].get<double>() == doctest::Approx(4.0 / 3.0));
  REQUIRE_FALSE(half.warnings.empty());
  CHECK(half.warnings.front().find("diverges") != std::string::npos);

  const auto fig6 = validate_config(parse_config(preset("fig6")));
  const auto& pts = fig6.derived["points"];
  CHECK(pts.back()["stability_margin"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("json and number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");

  const Json doc{{"b", 0.1}, {"a", {1, 2}}, {"c", std::numeric_limits<double>::infinity()}, {"d", Json::object()}};
  CHECK(dump_json(doc) == "{\n  \"a\": [\n    1,\n    2\n  ],\n  \"b\": 0.10000000000000001,\n  \"c\": null,\n  \"d\": {}\n}\n");
  CHECK(Json::parse(dump_json(doc))["b"].get<double>() == 0.1);

  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("static run outputs") {
  const auto cfg = parse_config(small_static());
  const auto dir = scratch("static");
  const auto run = run_experiment(cfg, dir);
  CHECK(run.exit_code == 0);
  CHECK(run.summary["status"] == "ok");
  CHECK(run.summary["version"].is_string());
  CHECK(run.summary["config_hash"].get<std::string>().size() == 16);
  CHECK(run.summary["base_seed"] == 5);

  const std::string trace = slurp(dir / "tiny_trace.csv");
  CHECK(trace.rfind("replica,event_index,time,cluster,old_band,new_band,aggregate_interference,active_count\n", 0) ==
        0);
  std::istringstream lines(trace);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line.rfind("0,0,0,,,,", 0) == 0);
  while (std::getline(lines, line)) CHECK(std::count(line.begin(), line.end(), ',') == 7);

  const Json summary = Json::parse(slurp(dir / "tiny_summary.json"));
  CHECK(summary["name"] == "tiny");
  const Json echo = Json::parse(slurp(dir / "tiny_config.json"));
  CHECK(echo["base_seed"] == 5);
  CHECK(fs::exists(dir / "tiny_series.csv"));

  SUBCASE("rerun is byte-identical") {
    const auto dir2 = scratch("static2");
    run_experiment(cfg, dir2);
    for (const char* f : {"tiny_trace.csv", "tiny_summary.json", "tiny_config.json", "tiny_series.csv"}) {
      CAPTURE(f);
      CHECK(slurp(dir / f) == slurp(dir2 / f));
    }
  }
  SUBCASE("another seed gives another trace") {
    Json doc = small_static();
    doc["base_seed"] = 6;
    const auto dir3 = scratch("static3");
    run_experiment(parse_config(doc), dir3);
    CHECK(slurp(dir / "tiny_trace.csv") != slurp(dir3 / "tiny_trace.csv"));
  }
}

TEST_CASE("small variance run") {
  Json doc = Json::parse(R"({
    "name": "var",
    "experiment": "variance",
    "topology": {"kind": "ula", "n": 20},
    "switching_rates": [0.01, 0.5],
    "horizon": 4,
    "warmup": 1,
    "replicas": 3,
    "base_seed": 3,
    "outputs": {"trace_csv": ""}
  })");
  const auto dir = scratch("variance");
  const auto run = run_experiment(parse_config(doc), dir);
  CHECK(run.exit_code == 0);
  CHECK_FALSE(fs::exists(dir / "var_trace_rate0.csv"));
  const std::string series = slurp(dir / "var_series.csv");
  CHECK(series.rfind("switching_rate,alpha,lambda,margin,predicted_variance,empirical_variance,ratio,divergent\n", 0) ==
        0);
  CHECK(series.find(",inf,") != std::string::npos);  // 0.5 is past the stability boundary
}
