#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bodyschema/dpgmm.hpp"

namespace bodyschema {

// Cluster label per data point; ids are arbitrary integers.
using Partition = std::vector<int>;

// Hubert-Arabie adjusted Rand index. When the chance-corrected denominator
// vanishes, returns 1 for identical set partitions and 0 otherwise.
// Throws ValidationError on length mismatch or fewer than two points.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

using UndirectedEdge = std::pair<int, int>;  // stored with first < second

// Estimated body schema for one sample: labels, counted components and the
// tree over them (edges between component ids).
struct SchemaEstimate {
  std::span<const int> labels;
  int active_count = 0;
  std::vector<std::pair<int, int>> edges;
};

// Ground truth: owning part per sensor and the part tree (parent per part, -1 root).
struct SchemaTruth {
  std::vector<int> labels;
  std::vector<int> parent;

  int part_count() const { return static_cast<int>(parent.size()); }
  std::vector<UndirectedEdge> edges() const;
};

struct SampleOutcome {
  double ari = 0.0;
  int active_count = 0;
  bool eligible = false;  // correct part count and ARI = 1
  bool success = false;   // eligible and identical undirected edge sets
};

SampleOutcome evaluate_schema(const SchemaEstimate& estimate, const SchemaTruth& truth);

// Eligibility plus exact edge-set match under the label bijection.
bool tree_success(const SchemaEstimate& estimate, const SchemaTruth& truth);

// MST over the active components' means with Euclidean edge lengths, rooted
// at the most populated component.
TreeStructure euclidean_prim_tree(const MixtureState& state, int min_active_count = 2);
std::vector<TreeStructure> euclidean_prim_baseline(std::span<const ChainSample> chain, int min_active_count = 2);

struct SampleRecord {
  std::string method;
  int dim = 0;
  double p_coordination = 0.0;
  std::uint64_t seed = 0;
  int sample_index = 0;
  SampleOutcome outcome;
};

struct EvaluationReport {
  std::vector<SampleRecord> records;

  // Successes over eligible samples; empty when nothing was eligible.
  std::optional<double> success_rate(const std::string& method = {}) const;
  std::map<int, int> node_count_histogram(const std::string& method = {}) const;
  std::vector<double> ari_values(const std::string& method = {}) const;
  int eligible_count(const std::string& method = {}) const;
  int success_count(const std::string& method = {}) const;

  void append(const EvaluationReport& other);
};

// Evaluates every sample of a chain. In latent-joint mode the sampled tree
// is scored; in plain mode the Euclidean Prim tree is used.
EvaluationReport evaluate_chain(std::span<const ChainSample> chain, const SchemaTruth& truth, const SampleRecord& meta,
                                SamplerMode mode, int min_active_count = 2);

// Same metadata fields for every sample: builds the full report.
EvaluationReport aggregate(const std::vector<std::vector<ChainSample>>& chains, const std::vector<SampleRecord>& meta,
                           const SchemaTruth& truth, SamplerMode mode, int min_active_count = 2);

// node_counts.csv, ari.csv and tree_success.csv with columns
// method,d,p_coordination,seed,sample_index,value; tree_success value is 1/0
// for eligible samples and NA otherwise. summary.csv holds the aggregates.
void write_report_csv(const EvaluationReport& report, const std::filesystem::path& dir);
EvaluationReport read_report_csv(const std::filesystem::path& dir);

double median(std::vector<double> values);

}  // namespace bodyschema
