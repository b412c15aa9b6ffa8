#include "bodyschema/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bodyschema/baselines.hpp"
#include "bodyschema/errors.hpp"
#include "bodyschema/hashing.hpp"
#include "bodyschema/io.hpp"

namespace bodyschema {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (dims.empty() || p_coordination.empty() || sim_seeds.empty() || modes.empty()) {
    throw ConfigError("dims, p_coordination, sim_seeds and modes must be non-empty");
  }
  if (chains < 1) throw ConfigError("chains must be at least 1");
  if (!(iterations > burn_in && burn_in >= 0)) throw ConfigError("iterations must exceed burn_in >= 0");
  if (n_levels < 2 || n_levels > 255) throw ConfigError("n_levels must lie in [2, 255]");
  if (metric_stride < 1) throw ConfigError("metric_stride must be at least 1");
  for (double p : p_coordination) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p_coordination values must lie in [0, 1]");
  }
  for (int d : dims) {
    if (d < 1) throw ConfigError("dims must be positive");
  }
  if (agent_path && !std::filesystem::exists(*agent_path)) {
    throw ConfigError("agent spec " + agent_path->string() + " does not exist");
  }
  MotionConfig m = motion;
  m.validate();
}

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    read_if(doc, "name", cfg.name);
    if (doc.contains("agent") && !doc.at("agent").is_null()) {
      std::filesystem::path p = doc.at("agent").get<std::string>();
      cfg.agent_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    read_if(doc, "total_sensors", cfg.total_sensors);
    if (doc.contains("motion")) {
      const auto& m = doc.at("motion");
      read_if(m, "decision_interval", cfg.motion.decision_interval);
      read_if(m, "dt", cfg.motion.dt);
      read_if(m, "total_steps", cfg.motion.total_steps);
      read_if(m, "controller_gain", cfg.motion.controller_gain);
      read_if(m, "settle_tolerance", cfg.motion.settle_tolerance);
      read_if(m, "rho", cfg.motion.rho);
      if (m.contains("controller")) {
        const auto c = m.at("controller").get<std::string>();
        if (c == "first_order") {
          cfg.motion.controller = Controller::kFirstOrder;
        } else if (c == "second_order") {
          cfg.motion.controller = Controller::kSecondOrder;
        } else {
          throw ConfigError("motion.controller must be first_order or second_order, got '" + c + "'");
        }
      }
      read_if(m, "damping_ratio", cfg.motion.damping_ratio);
      read_if(m, "axis_frequency_ratio", cfg.motion.axis_frequency_ratio);
    }
    read_if(doc, "n_levels", cfg.n_levels);
    read_if(doc, "metric_stride", cfg.metric_stride);
    read_if(doc, "dims", cfg.dims);
    read_if(doc, "p_coordination", cfg.p_coordination);
    read_if(doc, "sim_seeds", cfg.sim_seeds);
    if (doc.contains("hyperparameters")) {
      const auto& h = doc.at("hyperparameters");
      read_if(h, "gamma", cfg.hyper.gamma);
      read_if(h, "k0", cfg.hyper.k0);
      read_if(h, "nu0_offset", cfg.hyper.nu0_offset);
      if (h.contains("v0_scale") && !h.at("v0_scale").is_null()) cfg.hyper.v0_scale = h.at("v0_scale").get<double>();
      read_if(h, "k_max", cfg.hyper.k_max);
    }
    read_if(doc, "iterations", cfg.iterations);
    read_if(doc, "burn_in", cfg.burn_in);
    read_if(doc, "chains", cfg.chains);
    read_if(doc, "chain_seed", cfg.chain_seed);
    if (doc.contains("modes")) {
      cfg.modes.clear();
      for (const auto& m : doc.at("modes")) cfg.modes.push_back(parse_sampler_mode(m.get<std::string>()));
    }
    read_if(doc, "min_active_count", cfg.min_active_count);
    if (doc.contains("baselines")) {
      read_if(doc.at("baselines"), "methods", cfg.baselines.methods);
      read_if(doc.at("baselines"), "k", cfg.baselines.cluster_counts);
    }
    if (doc.contains("output")) cfg.output = doc.at("output").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), path.parent_path());
}

std::string to_json(const ExperimentConfig& cfg) {
  json modes = json::array();
  for (auto m : cfg.modes) modes.push_back(to_string(m));
  json doc{{"name", cfg.name},
           {"agent", cfg.agent_path ? json(cfg.agent_path->string()) : json(nullptr)},
           {"total_sensors", cfg.total_sensors},
           {"motion",
            {{"decision_interval", cfg.motion.decision_interval},
             {"dt", cfg.motion.dt},
             {"total_steps", cfg.motion.total_steps},
             {"controller_gain", cfg.motion.controller_gain},
             {"settle_tolerance", cfg.motion.settle_tolerance},
             {"rho", cfg.motion.rho},
             {"controller", cfg.motion.controller == Controller::kFirstOrder ? "first_order" : "second_order"},
             {"damping_ratio", cfg.motion.damping_ratio},
             {"axis_frequency_ratio", cfg.motion.axis_frequency_ratio}}},
           {"n_levels", cfg.n_levels},
           {"metric_stride", cfg.metric_stride},
           {"dims", cfg.dims},
           {"p_coordination", cfg.p_coordination},
           {"sim_seeds", cfg.sim_seeds},
           {"hyperparameters",
            {{"gamma", cfg.hyper.gamma},
             {"k0", cfg.hyper.k0},
             {"nu0_offset", cfg.hyper.nu0_offset},
             {"v0_scale", cfg.hyper.v0_scale ? json(*cfg.hyper.v0_scale) : json(nullptr)},
             {"k_max", cfg.hyper.k_max}}},
           {"iterations", cfg.iterations},
           {"burn_in", cfg.burn_in},
           {"chains", cfg.chains},
           {"chain_seed", cfg.chain_seed},
           {"modes", modes},
           {"min_active_count", cfg.min_active_count},
           {"baselines", {{"methods", cfg.baselines.methods}, {"k", cfg.baselines.cluster_counts}}},
           {"output", cfg.output.string()}};
  return doc.dump(2);
}

std::vector<std::string> preset_names() { return {"experiment1", "experiment2", "desk"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  if (name == "experiment1") {
    cfg.total_sensors = 840;
    cfg.motion.total_steps = 100000;
    cfg.dims.clear();
    for (int d = 2; d <= 15; ++d) cfg.dims.push_back(d);
    cfg.p_coordination = {0.9};
    cfg.output = "out/experiment1";
  } else if (name == "experiment2") {
    cfg.total_sensors = 840;
    cfg.motion.total_steps = 100000;
    cfg.dims = {14};
    cfg.p_coordination = {0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 1.0};
    cfg.output = "out/experiment2";
  } else if (name == "desk") {
    cfg.total_sensors = 160;
    cfg.motion.total_steps = 20000;
    cfg.dims = {14};
    cfg.p_coordination = {0.0, 0.9, 1.0};
    cfg.sim_seeds = {1, 2, 3};
    cfg.iterations = 600;
    cfg.burn_in = 300;
    cfg.chains = 5;
    cfg.output = "out/desk";
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return cfg;
}

AgentModel load_agent(const ExperimentConfig& cfg) {
  if (cfg.agent_path) return build_agent(load_agent_spec(*cfg.agent_path));
  return build_agent(default_agent_spec(cfg.total_sensors));
}

SchemaTruth schema_truth(const AgentModel& agent) { return {agent.sensor_labels(), agent.ground_truth_tree}; }

std::string baseline_method_name(const std::string& method, int k) { return method + "_k" + std::to_string(k); }

Partition run_baseline(const std::string& method, const Eigen::MatrixXd& data, int k, std::uint64_t seed) {
  if (method == "kmeans") return kmeans(data, k, seed).labels;
  if (method == "gmm") return gmm_em(data, k, seed);
  if (method == "ward") return ward(data, k);
  throw ConfigError("unknown baseline '" + method + "' (expected kmeans, gmm or ward)");
}

std::vector<std::vector<ChainSample>> run_chains(const BodyMap& map, const HyperparameterDefaults& hyper,
                                                 int iterations, int burn_in, int chains, std::uint64_t chain_seed,
                                                 const SamplerOptions& sampler) {
  const Hyperparameters hp = default_hyperparameters(map.points, hyper);
  std::vector<std::vector<ChainSample>> out;
  for (int c = 0; c < chains; ++c) {
    ChainOptions opts;
    opts.iterations = iterations;
    opts.burn_in = burn_in;
    opts.seed = chain_seed + static_cast<std::uint64_t>(c);
    opts.sampler = sampler;
    out.push_back(run_chain(map.points, hp, opts));
  }
  return out;
}

namespace {

class Cache {
 public:
  explicit Cache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  std::filesystem::path path(const std::string& key, const char* ext) const { return dir_ / (key + ext); }

  template <typename T, typename Make, typename Write, typename Read>
  T get_or_make(const std::string& key, const char* ext, Make make, Write write, Read read, bool& hit) const {
    const auto file = path(key, ext);
    if (std::filesystem::exists(file)) {
      try {
        hit = true;
        return read(file);
      } catch (const FormatError&) {
        // Stale or truncated artifact; rebuild below.
      }
    }
    hit = false;
    T value = make();
    const auto tmp = file.string() + ".tmp";
    write(value, tmp);
    std::filesystem::rename(tmp, file);
    return value;
  }

 private:
  std::filesystem::path dir_;
};

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  ContentHasher h;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(std::as_bytes(std::span(buf.data(), static_cast<std::size_t>(in.gcount()))));
  }
  return h.hex_digest();
}

std::string format_p(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

}  // namespace

EvaluationReport run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& opts) {
  cfg.validate();
  const AgentModel agent = load_agent(cfg);
  const SchemaTruth truth = schema_truth(agent);
  const Cache cache(cfg.output / "cache");

  std::mutex mu;
  auto log = [&](const std::string& msg) {
    std::lock_guard lock(mu);
    if (opts.log) {
      opts.log(msg);
    } else {
      std::cerr << msg << '\n';
    }
  };

  struct Group {
    double p;
    std::size_t seed_index;
  };
  std::vector<Group> groups;
  for (double p : cfg.p_coordination) {
    for (std::size_t s = 0; s < cfg.sim_seeds.size(); ++s) groups.push_back({p, s});
  }

  EvaluationReport report;
  std::vector<std::string> failures;
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (std::size_t g = next++; g < groups.size(); g = next++) {
      const auto [p, s_idx] = groups[g];
      const std::uint64_t sim_seed = cfg.sim_seeds[s_idx];
      const std::string tag = "p=" + format_p(p) + " seed=" + std::to_string(sim_seed);
      EvaluationReport local;
      try {
        MotionConfig motion = cfg.motion;
        motion.p_coordination = p;
        motion.seed = sim_seed;

        ContentHasher kh;
        kh.update("tactile-v1").update_value(agent.fingerprint());
        kh.update_value(motion.p_coordination).update_value(motion.decision_interval).update_value(motion.dt);
        kh.update_value(motion.total_steps).update_value(motion.controller_gain);
        kh.update_value(motion.settle_tolerance).update_value(motion.rho).update_value(motion.seed);
        kh.update_value(static_cast<int>(motion.controller)).update_value(motion.damping_ratio);
        kh.update_value(motion.axis_frequency_ratio);
        kh.update_value(cfg.n_levels);
        const std::string log_key = kh.hex_digest();

        bool hit = false;
        const TactileLog tactile = cache.get_or_make<TactileLog>(
            log_key, ".bstl", [&] { return quantize(simulate(agent, motion), cfg.n_levels); },
            [](const TactileLog& v, const std::filesystem::path& f) { write_tactile_log(v, f); },
            [](const std::filesystem::path& f) { return read_tactile_log(f); }, hit);
        log(tag + ": tactile log " + (hit ? "cached" : "simulated"));

        const std::string dist_key = sha256_hex(log_key + "|metric|" + std::to_string(cfg.metric_stride));
        const DistanceMatrix dist = cache.get_or_make<DistanceMatrix>(
            dist_key, ".bsdm", [&] { return information_metric(tactile, cfg.metric_stride); },
            [](const DistanceMatrix& v, const std::filesystem::path& f) { write_distance_matrix(v, f); },
            [](const std::filesystem::path& f) { return read_distance_matrix(f); }, hit);
        log(tag + ": information metric " + (hit ? "cached" : "computed"));

        for (int d : cfg.dims) {
          const std::string dtag = tag + " d=" + std::to_string(d);
          const std::string map_key = sha256_hex(dist_key + "|mds|" + std::to_string(d));
          const BodyMap map = cache.get_or_make<BodyMap>(
              map_key, ".bsbm", [&] { return mds_embed(dist, d); },
              [](const BodyMap& v, const std::filesystem::path& f) { write_body_map(v, f); },
              [](const std::filesystem::path& f) { return read_body_map(f); }, hit);

          const auto run_dir = cfg.output / "runs" / ("d" + std::to_string(d) + "_p" + format_p(p) + "_s" + std::to_string(sim_seed));
          std::filesystem::create_directories(run_dir);
          json manifest{{"d", d},
                        {"p_coordination", p},
                        {"sim_seed", sim_seed},
                        {"tactile_log", {{"path", cache.path(log_key, ".bstl").string()}, {"sha256", file_sha256(cache.path(log_key, ".bstl"))}}},
                        {"distance_matrix", {{"path", cache.path(dist_key, ".bsdm").string()}, {"sha256", file_sha256(cache.path(dist_key, ".bsdm"))}}},
                        {"body_map", {{"path", cache.path(map_key, ".bsbm").string()}, {"sha256", file_sha256(cache.path(map_key, ".bsbm"))}}},
                        {"chains", json::array()}};

          const std::uint64_t base_seed = cfg.chain_seed + 1000 * static_cast<std::uint64_t>(s_idx);
          for (SamplerMode mode : cfg.modes) {
            SamplerOptions sampler;
            sampler.mode = mode;
            sampler.min_active_count = cfg.min_active_count;
            const Hyperparameters hp = default_hyperparameters(map.points, cfg.hyper);
            for (int c = 0; c < cfg.chains; ++c) {
              const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(c);
              ContentHasher ch;
              ch.update("chain-v1").update(map_key).update(to_string(mode));
              ch.update_value(hp.gamma).update_value(hp.k0).update_value(hp.nu0).update_value(hp.k_max);
              ch.update_values(std::span<const double>(hp.m0.data(), static_cast<std::size_t>(hp.m0.size())));
              ch.update_values(std::span<const double>(hp.V0.data(), static_cast<std::size_t>(hp.V0.size())));
              ch.update_value(cfg.iterations).update_value(cfg.burn_in).update_value(seed).update_value(cfg.min_active_count);
              const std::string chain_key = ch.hex_digest();
              const ChainHeader header{mode, seed, hp.k_max, d, static_cast<int>(map.points.rows()), cfg.min_active_count};
              const auto samples = cache.get_or_make<std::vector<ChainSample>>(
                  chain_key, ".jsonl",
                  [&] {
                    ChainOptions co;
                    co.iterations = cfg.iterations;
                    co.burn_in = cfg.burn_in;
                    co.seed = seed;
                    co.sampler = sampler;
                    return run_chain(map.points, hp, co);
                  },
                  [&](const std::vector<ChainSample>& v, const std::filesystem::path& f) { write_chain(header, v, f); },
                  [](const std::filesystem::path& f) { return read_chain(f); }, hit);
              manifest["chains"].push_back({{"mode", to_string(mode)},
                                            {"seed", seed},
                                            {"path", cache.path(chain_key, ".jsonl").string()},
                                            {"sha256", file_sha256(cache.path(chain_key, ".jsonl"))}});
              const SampleRecord meta{to_string(mode), d, p, seed, 0, {}};
              local.append(evaluate_chain(samples, truth, meta, mode, cfg.min_active_count));
              log(dtag + ": " + to_string(mode) + " chain " + std::to_string(c) + (hit ? " cached" : " sampled"));
            }
          }

          for (const auto& method : cfg.baselines.methods) {
            for (int k : cfg.baselines.cluster_counts) {
              if (k > map.points.rows()) continue;
              const auto labels = run_baseline(method, map.points, k, base_seed);
              SampleRecord r{baseline_method_name(method, k), d, p, base_seed, 0, {}};
              r.outcome.ari = adjusted_rand_index(labels, truth.labels);
              r.outcome.active_count = k;
              local.records.push_back(std::move(r));
            }
          }
          std::ofstream(run_dir / "manifest.json") << manifest.dump(2) << '\n';
        }
      } catch (const std::exception& e) {
        log(tag + ": FAILED: " + e.what());
        std::lock_guard lock(mu);
        failures.push_back(tag + ": " + e.what());
        continue;
      }
      std::lock_guard lock(mu);
      report.append(local);
    }
  };

  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(groups.size())));
  {
    std::vector<std::jthread> workers;
    for (int j = 1; j < jobs; ++j) workers.emplace_back(work);
    work();
  }

  // Worker completion order varies; sort for byte-stable CSVs.
  std::sort(report.records.begin(), report.records.end(), [](const SampleRecord& a, const SampleRecord& b) {
    return std::tie(a.method, a.dim, a.p_coordination, a.seed, a.sample_index) <
           std::tie(b.method, b.dim, b.p_coordination, b.seed, b.sample_index);
  });
  std::filesystem::create_directories(cfg.output);
  if (!report.records.empty()) write_report_csv(report, cfg.output);
  std::ofstream errors(cfg.output / "errors.log");
  for (const auto& f : failures) errors << f << '\n';
  return report;
}

}  // namespace bodyschema
