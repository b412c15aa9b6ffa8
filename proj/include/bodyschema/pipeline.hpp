#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bodyschema/agent.hpp"
#include "bodyschema/body_map.hpp"
#include "bodyschema/dpgmm.hpp"
#include "bodyschema/metrics.hpp"
#include "bodyschema/simulation.hpp"

namespace bodyschema {

struct BaselineConfig {
  std::vector<std::string> methods{"kmeans", "gmm", "ward"};
  std::vector<int> cluster_counts{3, 5, 10};
};

struct ExperimentConfig {
  std::string name = "custom";
  std::optional<std::filesystem::path> agent_path;  // default agent when absent
  int total_sensors = 840;                          // used by the default agent
  MotionConfig motion;                              // p_coordination and seed are swept
  int n_levels = 10;
  int metric_stride = 1;
  std::vector<int> dims{14};
  std::vector<double> p_coordination{0.9};
  std::vector<std::uint64_t> sim_seeds{1};
  HyperparameterDefaults hyper;
  int iterations = 1000;
  int burn_in = 500;
  int chains = 1;
  std::uint64_t chain_seed = 1000;
  std::vector<SamplerMode> modes{SamplerMode::kDpgmmLj, SamplerMode::kDpgmm};
  int min_active_count = 2;
  BaselineConfig baselines;
  std::filesystem::path output = "out";

  // Throws ConfigError for empty sweeps or inconsistent values.
  void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string to_json(const ExperimentConfig& cfg);

// Built-in presets: "experiment1", "experiment2" and "desk".
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

AgentModel load_agent(const ExperimentConfig& cfg);
SchemaTruth schema_truth(const AgentModel& agent);

// Method names used in report rows for the clustering baselines.
std::string baseline_method_name(const std::string& method, int k);
Partition run_baseline(const std::string& method, const Eigen::MatrixXd& data, int k, std::uint64_t seed);

// Chain seeds are chain_seed + index.
std::vector<std::vector<ChainSample>> run_chains(const BodyMap& map, const HyperparameterDefaults& hyper,
                                                 int iterations, int burn_in, int chains, std::uint64_t chain_seed,
                                                 const SamplerOptions& sampler);

struct PipelineOptions {
  int jobs = 1;
  std::function<void(const std::string&)> log;  // progress sink; stderr when empty
};

// Runs every (d, p_coordination, seed) combination, caching intermediate
// artifacts under <output>/cache by the hash of their inputs. A failing
// combination is logged and skipped. Writes the report CSVs to <output>.
EvaluationReport run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& opts = {});

}  // namespace bodyschema
