#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include <json.hpp>

#include "bodyschema/errors.hpp"
#include "bodyschema/io.hpp"
#include "bodyschema/pipeline.hpp"
#include "oracles.hpp"

using namespace bodyschema;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "name": "tiny",
  "total_sensors": 40,
  "motion": {"total_steps": 1500, "decision_interval": 100},
  "dims": [3],
  "p_coordination": [0.5],
  "sim_seeds": [4],
  "iterations": 20,
  "burn_in": 10,
  "chains": 2,
  "baselines": {"methods": ["kmeans", "ward"], "k": [3, 5]}
})";

ExperimentConfig tiny(const fs::path& out) {
  auto cfg = parse_experiment_config(kTinyConfig);
  cfg.output = out;
  return cfg;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(BODYSCHEMA_CLI_PATH) + " " + args + " 2>/dev/null";
  return std::system(cmd.c_str());
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("config JSON round trip") {
  const auto cfg = parse_experiment_config(kTinyConfig);
  CHECK(cfg.name == "tiny");
  CHECK(cfg.total_sensors == 40);
  CHECK(cfg.motion.total_steps == 1500);
  CHECK(cfg.chains == 2);
  CHECK(cfg.baselines.cluster_counts == std::vector<int>{3, 5});
  CHECK_FALSE(cfg.hyper.v0_scale.has_value());
  const auto again = parse_experiment_config(to_json(cfg));
  CHECK(to_json(again) == to_json(cfg));
}

TEST_CASE("shipped preset files match the built-in presets") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto file = load_experiment_config(fs::path(BODYSCHEMA_SOURCE_DIR) / "presets" / (name + ".json"));
    CHECK(to_json(file) == to_json(preset(name)));
    CHECK_NOTHROW(preset(name).validate());
  }
  const auto e1 = preset("experiment1");
  CHECK(e1.dims.size() == 14);
  CHECK(e1.dims.front() == 2);
  CHECK(e1.dims.back() == 15);
  CHECK(e1.p_coordination == std::vector<double>{0.9});
  CHECK(e1.total_sensors == 840);
  const auto e2 = preset("experiment2");
  CHECK(e2.dims == std::vector<int>{14});
  CHECK(e2.p_coordination.size() == 8);
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_experiment_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"dims": "three"})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"motion": {"controller": "pid"}})"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"modes": ["hmm"]})"), std::exception);
  auto cfg = parse_experiment_config(kTinyConfig);
  cfg.burn_in = cfg.iterations;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = parse_experiment_config(R"({"p_coordination": [1.5]})");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = parse_experiment_config(R"({"agent": "missing_agent.json"})", "/nonexistent");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("pipeline writes reports, reuses its cache and is reproducible") {
  const auto dir = oracle::scratch_dir("pipeline");
  const auto cfg = tiny(dir);
  std::vector<std::string> first_log;
  PipelineOptions opts;
  opts.log = [&](const std::string& m) { first_log.push_back(m); };
  const auto report = run_pipeline(cfg, opts);

  // 2 chains x 10 samples for each mode, one row per baseline.
  CHECK(report.ari_values("dpgmm_lj").size() == 20);
  CHECK(report.ari_values("dpgmm").size() == 20);
  CHECK(report.ari_values("kmeans_k3").size() == 1);
  CHECK(report.ari_values("ward_k5").size() == 1);
  for (const char* f : {"ari.csv", "node_counts.csv", "tree_success.csv", "summary.csv", "errors.log"})
    CHECK(fs::exists(dir / f));
  CHECK(oracle::slurp(dir / "errors.log").empty());
  const auto manifest = nlohmann::json::parse(oracle::slurp(dir / "runs" / "d3_p0.5_s4" / "manifest.json"));
  CHECK(manifest.at("chains").size() == 4);

  const auto ari_first = oracle::slurp(dir / "ari.csv");
  const auto summary_first = oracle::slurp(dir / "summary.csv");
  std::vector<std::string> second_log;
  opts.log = [&](const std::string& m) { second_log.push_back(m); };
  run_pipeline(cfg, opts);
  int simulated = 0, sampled = 0;
  for (const auto& m : second_log) {
    simulated += m.find("simulated") != std::string::npos;
    sampled += m.find("sampled") != std::string::npos;
  }
  CHECK(simulated == 0);
  CHECK(sampled == 0);
  CHECK(oracle::slurp(dir / "ari.csv") == ari_first);
  CHECK(oracle::slurp(dir / "summary.csv") == summary_first);

  // A fresh cache gives the same numbers.
  const auto other = oracle::scratch_dir("pipeline_fresh");
  run_pipeline(tiny(other), PipelineOptions{1, [](const std::string&) {}});
  CHECK(oracle::slurp(other / "ari.csv") == ari_first);
}

TEST_CASE("pipeline logs a failing combination and continues") {
  const auto dir = oracle::scratch_dir("pipeline_fail");
  auto cfg = tiny(dir);
  cfg.dims = {60};  // more than the 40 sensors allow
  cfg.p_coordination = {0.5, 0.6};
  int failures = 0;
  const auto report = run_pipeline(cfg, PipelineOptions{1, [&](const std::string& m) {
                                                          failures += m.find("FAILED") != std::string::npos;
                                                        }});
  CHECK(failures == 2);
  CHECK(report.records.empty());
  std::ifstream in(dir / "errors.log");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 2);
}

TEST_CASE("CLI stages reproduce the pipeline artifacts byte for byte") {
  const auto dir = oracle::scratch_dir("cli_stages");
  const auto cfg = tiny(dir / "run");
  run_pipeline(cfg, PipelineOptions{1, [](const std::string&) {}});
  const auto manifest = nlohmann::json::parse(oracle::slurp(dir / "run" / "runs" / "d3_p0.5_s4" / "manifest.json"));

  std::ofstream(dir / "tiny.json") << kTinyConfig;
  const auto conf = q(dir / "tiny.json");
  REQUIRE(cli("simulate --config " + conf + " --out " + q(dir / "raw.bstl")) == 0);
  CHECK_FALSE(read_tactile_log(dir / "raw.bstl").quantized.has_value());
  REQUIRE(cli("quantize --in " + q(dir / "raw.bstl") + " --out " + q(dir / "log.bstl")) == 0);
  REQUIRE(cli("metric --in " + q(dir / "log.bstl") + " --out " + q(dir / "d.bsdm")) == 0);
  REQUIRE(cli("embed --in " + q(dir / "d.bsdm") + " --dim 3 --out " + q(dir / "m.bsbm")) == 0);
  REQUIRE(cli("infer --config " + conf + " --in " + q(dir / "m.bsbm") + " --out " + q(dir / "c.jsonl")) == 0);

  CHECK(oracle::slurp(dir / "log.bstl") == oracle::slurp(manifest["tactile_log"]["path"].get<std::string>()));
  CHECK(oracle::slurp(dir / "d.bsdm") == oracle::slurp(manifest["distance_matrix"]["path"].get<std::string>()));
  CHECK(oracle::slurp(dir / "m.bsbm") == oracle::slurp(manifest["body_map"]["path"].get<std::string>()));
  const auto& first_chain = manifest["chains"][0];
  CHECK(first_chain["mode"] == "dpgmm_lj");
  CHECK(oracle::slurp(dir / "c.jsonl") == oracle::slurp(first_chain["path"].get<std::string>()));

  REQUIRE(cli("evaluate --config " + conf + " --chain " + q(dir / "c.jsonl") + " --p-coordination 0.5 --out " +
              q(dir / "eval")) == 0);
  const auto eval = read_report_csv(dir / "eval");
  CHECK(eval.records.size() == 10);
}

TEST_CASE("CLI metric on a toy log and plain-mode inference") {
  const auto dir = oracle::scratch_dir("cli_toy");
  TactileLog log;
  log.raw.resize(4, 40);
  for (int t = 0; t < 40; ++t) {
    log.raw(0, t) = static_cast<float>(t % 5);
    log.raw(1, t) = static_cast<float>(t % 5);
    log.raw(2, t) = static_cast<float>((t * 7) % 11);
    log.raw(3, t) = static_cast<float>(t / 10);
  }
  write_tactile_log(quantize(log, 4), dir / "toy.bstl");
  REQUIRE(cli("metric --in " + q(dir / "toy.bstl") + " --out " + q(dir / "toy.csv")) == 0);
  const auto d = read_matrix_csv(dir / "toy.csv");
  REQUIRE(d.rows() == 4);
  REQUIRE(d.cols() == 4);
  CHECK(d.diagonal().isZero(0));
  CHECK(d(0, 1) == 0.0);
  CHECK(d == d.transpose());

  REQUIRE(cli("embed --in " + q(dir / "toy.csv") + " --dim 2 --out " + q(dir / "map.csv")) == 0);
  REQUIRE(cli("infer --in " + q(dir / "map.csv") + " --mode dpgmm --iterations 12 --burn-in 2 --out " +
              q(dir / "c.jsonl")) == 0);
  ChainHeader h;
  const auto chain = read_chain(dir / "c.jsonl", &h);
  CHECK(h.mode == SamplerMode::kDpgmm);
  CHECK(chain.size() == 10);
  for (const auto& s : chain) {
    CHECK(s.state.joints.empty());
    CHECK(s.state.tree.empty());
  }

  CHECK(cli("metric --in " + q(dir / "missing.bstl") + " --out " + q(dir / "x.csv")) != 0);
  CHECK(cli("embed --in " + q(dir / "toy.csv") + " --dim 9 --out " + q(dir / "x.csv")) != 0);
  CHECK(cli("show-preset nope") != 0);
}
