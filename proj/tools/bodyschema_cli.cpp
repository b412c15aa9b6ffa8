// Command-line front end: individual pipeline stages plus the full sweep.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bodyschema/errors.hpp"
#include "bodyschema/io.hpp"
#include "bodyschema/pipeline.hpp"

namespace fs = std::filesystem;
using namespace bodyschema;

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<double> p_coordination;
  std::optional<int> n_levels;
  std::optional<int> dim;
  std::optional<std::string> mode;
  std::string out;
};

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty() && !c.preset.empty()) throw ConfigError("use either --config or --preset, not both");
  if (!c.config.empty()) cfg = load_experiment_config(c.config);
  if (!c.preset.empty()) cfg = preset(c.preset);
  if (c.p_coordination) cfg.p_coordination = {*c.p_coordination};
  if (c.n_levels) cfg.n_levels = *c.n_levels;
  if (c.dim) cfg.dims = {*c.dim};
  if (c.mode) cfg.modes = {parse_sampler_mode(*c.mode)};
  return cfg;
}

void add_config_flags(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--preset", c.preset, "Built-in preset: experiment1, experiment2, desk");
}

bool is_csv(const fs::path& p) { return p.extension() == ".csv"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Body schema estimation from tactile logs"};
  app.require_subcommand(1);
  Common c;
  std::string input;

  auto* sim = app.add_subcommand("simulate", "Simulate the agent and write a raw tactile log");
  add_config_flags(sim, c);
  sim->add_option("--seed", c.seed, "Simulation seed (default: first sim seed of the config)");
  sim->add_option("--p-coordination", c.p_coordination, "Probability that a joint stays still per epoch");
  sim->add_option("--out", c.out, "Output tactile log (.bstl)")->required();

  auto* quant = app.add_subcommand("quantize", "Quantize a tactile log into per-sensor quantile bins");
  quant->add_option("--in", input, "Tactile log")->required()->check(CLI::ExistingFile);
  int quant_levels = 10;
  quant->add_option("--n-levels", quant_levels, "Number of quantization levels")->capture_default_str();
  quant->add_option("--out", c.out, "Output tactile log")->required();

  int stride = 1;
  auto* met = app.add_subcommand("metric", "Information distance between sensor channels");
  met->add_option("--in", input, "Quantized tactile log")->required()->check(CLI::ExistingFile);
  met->add_option("--stride", stride, "Use every stride-th time step")->default_val(1);
  met->add_option("--out", c.out, "Output distance matrix (.bsdm, or .csv)")->required();

  auto* emb = app.add_subcommand("embed", "Classical MDS embedding of a distance matrix");
  emb->add_option("--in", input, "Distance matrix (.bsdm or .csv)")->required()->check(CLI::ExistingFile);
  int embed_dim = 14;
  emb->add_option("--dim", embed_dim, "Embedding dimension")->required();
  emb->add_option("--out", c.out, "Output body map (.bsbm, or .csv)")->required();

  int iterations = 1000, burn_in = 500, min_active = 2;
  auto* inf = app.add_subcommand("infer", "Run one Gibbs chain on a body map");
  add_config_flags(inf, c);
  inf->add_option("--in", input, "Body map (.bsbm or .csv)")->required()->check(CLI::ExistingFile);
  std::string infer_mode = "dpgmm_lj";
  std::uint64_t infer_seed = 1000;
  inf->add_option("--mode", infer_mode, "dpgmm_lj or dpgmm")->capture_default_str();
  inf->add_option("--seed", infer_seed, "Chain seed")->capture_default_str();
  inf->add_option("--iterations", iterations, "Gibbs sweeps (overrides config)");
  inf->add_option("--burn-in", burn_in, "Discarded sweeps (overrides config)");
  inf->add_option("--out", c.out, "Output chain dump (.jsonl)")->required();

  std::vector<std::string> chain_files;
  auto* ev = app.add_subcommand("evaluate", "Score chain dumps against the agent's ground truth");
  add_config_flags(ev, c);
  ev->add_option("--chain", chain_files, "Chain dumps")->required()->check(CLI::ExistingFile);
  double eval_p = 0.9;
  ev->add_option("--p-coordination", eval_p, "Value recorded in the report rows")->capture_default_str();
  ev->add_option("--out", c.out, "Output directory for the CSVs")->required();

  std::vector<std::string> report_dirs;
  auto* rep = app.add_subcommand("report", "Collate report CSVs from several directories");
  rep->add_option("dirs", report_dirs, "Directories holding report CSVs")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--out", c.out, "Output directory")->required();

  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run the full sweep described by a config or preset");
  add_config_flags(run, c);
  run->add_option("--jobs", jobs, "Worker threads across sweep combinations")->default_val(1);
  run->add_option("--seed", c.seed, "Single simulation seed (overrides config)");
  run->add_option("--p-coordination", c.p_coordination, "Single coordination value (overrides config)");
  run->add_option("--n-levels", c.n_levels, "Quantization levels (overrides config)");
  run->add_option("--dim", c.dim, "Single embedding dimension (overrides config)");
  run->add_option("--mode", c.mode, "Single sampler mode (overrides config)");
  run->add_option("--out", c.out, "Output directory (overrides config)");

  auto* show = app.add_subcommand("show-preset", "Print a preset as a config file");
  std::string preset_name;
  show->add_option("name", preset_name, "Preset name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const ExperimentConfig cfg = resolve_config(c);
      MotionConfig motion = cfg.motion;
      motion.p_coordination = cfg.p_coordination.front();
      motion.seed = c.seed.value_or(cfg.sim_seeds.front());
      write_tactile_log(simulate(load_agent(cfg), motion), c.out);
    } else if (*quant) {
      write_tactile_log(quantize(read_tactile_log(input), quant_levels), c.out);
    } else if (*met) {
      const DistanceMatrix d = information_metric(read_tactile_log(input), stride);
      if (is_csv(c.out)) {
        write_matrix_csv(d.values, c.out);
      } else {
        write_distance_matrix(d, c.out);
      }
    } else if (*emb) {
      DistanceMatrix d;
      d.values = is_csv(input) ? read_matrix_csv(input) : read_distance_matrix(input).values;
      const BodyMap map = mds_embed(d, embed_dim);
      if (is_csv(c.out)) {
        write_matrix_csv(map.points, c.out);
      } else {
        write_body_map(map, c.out);
      }
    } else if (*inf) {
      ExperimentConfig cfg = resolve_config(c);
      if (inf->count("--iterations") == 0) iterations = cfg.iterations;
      if (inf->count("--burn-in") == 0) burn_in = cfg.burn_in;
      min_active = cfg.min_active_count;
      const Eigen::MatrixXd points = is_csv(input) ? read_matrix_csv(input) : read_body_map(input).points;
      const Hyperparameters hp = default_hyperparameters(points, cfg.hyper);
      ChainOptions opts;
      opts.iterations = iterations;
      opts.burn_in = burn_in;
      opts.seed = infer_seed;
      opts.sampler.mode = parse_sampler_mode(infer_mode);
      opts.sampler.min_active_count = min_active;
      const auto samples = run_chain(points, hp, opts);
      const ChainHeader header{opts.sampler.mode, opts.seed, hp.k_max, static_cast<int>(points.cols()),
                               static_cast<int>(points.rows()), min_active};
      write_chain(header, samples, c.out);
    } else if (*ev) {
      const ExperimentConfig cfg = resolve_config(c);
      const SchemaTruth truth = schema_truth(load_agent(cfg));
      EvaluationReport report;
      for (const auto& f : chain_files) {
        ChainHeader h;
        const auto samples = read_chain(f, &h);
        const SampleRecord meta{to_string(h.mode), h.dim, eval_p, h.seed, 0, {}};
        report.append(evaluate_chain(samples, truth, meta, h.mode, h.min_active_count));
      }
      write_report_csv(report, c.out);
    } else if (*rep) {
      EvaluationReport report;
      for (const auto& d : report_dirs) report.append(read_report_csv(d));
      write_report_csv(report, c.out);
    } else if (*run) {
      ExperimentConfig cfg = resolve_config(c);
      if (c.seed) cfg.sim_seeds = {*c.seed};
      if (!c.out.empty()) cfg.output = c.out;
      PipelineOptions opts;
      opts.jobs = jobs;
      const EvaluationReport report = run_pipeline(cfg, opts);
      for (auto mode : cfg.modes) {
        const auto name = to_string(mode);
        const auto rate = report.success_rate(name);
        std::cout << name << ": median ARI " << median(report.ari_values(name)) << ", tree success "
                  << (rate ? std::to_string(*rate) : std::string("NA")) << '\n';
      }
    } else if (*show) {
      std::cout << to_json(preset(preset_name)) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
