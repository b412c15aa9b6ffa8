#include "bodyschema/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "bodyschema/errors.hpp"
#include "bodyschema/prim.hpp"

namespace bodyschema {

namespace {

std::int64_t pairs(std::int64_t n) { return n * (n - 1) / 2; }

}  // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("partitions differ in length");
  if (a.size() < 2) throw ValidationError("adjusted Rand index needs at least two points");
  std::map<std::pair<int, int>, std::int64_t> table;
  std::map<int, std::int64_t> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  std::int64_t index = 0, sum_a = 0, sum_b = 0;
  for (const auto& [cell, n] : table) index += pairs(n);
  for (const auto& [label, n] : rows) sum_a += pairs(n);
  for (const auto& [label, n] : cols) sum_b += pairs(n);
  const double total = static_cast<double>(pairs(static_cast<std::int64_t>(a.size())));
  const double expected = static_cast<double>(sum_a) * static_cast<double>(sum_b) / total;
  const double maximum = 0.5 * static_cast<double>(sum_a + sum_b);
  const double denom = maximum - expected;
  if (denom == 0.0) return (index == sum_a && index == sum_b) ? 1.0 : 0.0;
  return (static_cast<double>(index) - expected) / denom;
}

std::vector<UndirectedEdge> SchemaTruth::edges() const {
  std::vector<UndirectedEdge> out;
  for (std::size_t p = 0; p < parent.size(); ++p) {
    if (parent[p] >= 0) out.emplace_back(std::minmax(static_cast<int>(p), parent[p]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

SampleOutcome evaluate_schema(const SchemaEstimate& estimate, const SchemaTruth& truth) {
  SampleOutcome out;
  out.ari = adjusted_rand_index(estimate.labels, truth.labels);
  out.active_count = estimate.active_count;
  out.eligible = estimate.active_count == truth.part_count() && out.ari >= 1.0 - 1e-12;
  if (!out.eligible) return out;

  // ARI = 1 makes label -> part a bijection.
  std::map<int, int> to_part;
  for (std::size_t i = 0; i < truth.labels.size(); ++i) to_part[estimate.labels[i]] = truth.labels[i];
  std::vector<UndirectedEdge> mapped;
  for (const auto& [u, v] : estimate.edges) {
    const auto iu = to_part.find(u);
    const auto iv = to_part.find(v);
    if (iu == to_part.end() || iv == to_part.end()) return out;
    mapped.emplace_back(std::minmax(iu->second, iv->second));
  }
  std::sort(mapped.begin(), mapped.end());
  out.success = mapped == truth.edges();
  return out;
}

bool tree_success(const SchemaEstimate& estimate, const SchemaTruth& truth) {
  return evaluate_schema(estimate, truth).success;
}

TreeStructure euclidean_prim_tree(const MixtureState& state, int min_active_count) {
  TreeStructure tree;
  tree.active = active_components(state.z, state.k_max(), min_active_count);
  tree.parent.assign(static_cast<std::size_t>(state.k_max()), TreeStructure::kAbsent);
  if (tree.active.empty()) return tree;
  const auto s = static_cast<Eigen::Index>(tree.active.size());
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(s, s);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = a + 1; b < s; ++b) {
      dist(a, b) = dist(b, a) =
          (state.components[tree.active[a]].mean - state.components[tree.active[b]].mean).norm();
    }
  }
  const auto counts = state.counts();
  Eigen::Index root = 0;
  for (Eigen::Index a = 1; a < s; ++a) {
    if (counts[tree.active[a]] > counts[tree.active[root]]) root = a;
  }
  const auto links = prim_mst(dist, static_cast<int>(root));
  for (Eigen::Index a = 0; a < s; ++a) {
    tree.parent[tree.active[a]] = links[a] < 0 ? TreeStructure::kRoot : tree.active[links[a]];
  }
  return tree;
}

std::vector<TreeStructure> euclidean_prim_baseline(std::span<const ChainSample> chain, int min_active_count) {
  std::vector<TreeStructure> out;
  out.reserve(chain.size());
  for (const auto& sample : chain) out.push_back(euclidean_prim_tree(sample.state, min_active_count));
  return out;
}

namespace {

bool matches(const SampleRecord& r, const std::string& method) { return method.empty() || r.method == method; }

}  // namespace

std::optional<double> EvaluationReport::success_rate(const std::string& method) const {
  const int eligible = eligible_count(method);
  if (eligible == 0) return std::nullopt;
  return static_cast<double>(success_count(method)) / eligible;
}

std::map<int, int> EvaluationReport::node_count_histogram(const std::string& method) const {
  std::map<int, int> hist;
  for (const auto& r : records) {
    if (matches(r, method)) ++hist[r.outcome.active_count];
  }
  return hist;
}

std::vector<double> EvaluationReport::ari_values(const std::string& method) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (matches(r, method)) out.push_back(r.outcome.ari);
  }
  return out;
}

int EvaluationReport::eligible_count(const std::string& method) const {
  return static_cast<int>(std::count_if(records.begin(), records.end(),
                                        [&](const SampleRecord& r) { return matches(r, method) && r.outcome.eligible; }));
}

int EvaluationReport::success_count(const std::string& method) const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [&](const SampleRecord& r) {
    return matches(r, method) && r.outcome.eligible && r.outcome.success;
  }));
}

void EvaluationReport::append(const EvaluationReport& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
}

EvaluationReport evaluate_chain(std::span<const ChainSample> chain, const SchemaTruth& truth, const SampleRecord& meta,
                                SamplerMode mode, int min_active_count) {
  EvaluationReport report;
  int index = 0;
  for (const auto& sample : chain) {
    SchemaEstimate estimate;
    estimate.labels = sample.state.z;
    if (mode == SamplerMode::kDpgmmLj) {
      estimate.active_count = static_cast<int>(sample.state.tree.active.size());
      estimate.edges = sample.state.tree.edges();
    } else {
      const auto tree = euclidean_prim_tree(sample.state, min_active_count);
      estimate.active_count = static_cast<int>(tree.active.size());
      estimate.edges = tree.edges();
    }
    SampleRecord record = meta;
    record.sample_index = index++;
    record.outcome = evaluate_schema(estimate, truth);
    report.records.push_back(std::move(record));
  }
  return report;
}

EvaluationReport aggregate(const std::vector<std::vector<ChainSample>>& chains, const std::vector<SampleRecord>& meta,
                           const SchemaTruth& truth, SamplerMode mode, int min_active_count) {
  if (chains.empty()) throw ConfigError("aggregate needs at least one chain");
  if (meta.size() != chains.size()) throw ConfigError("one metadata record per chain is required");
  EvaluationReport report;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    report.append(evaluate_chain(chains[c], truth, meta[c], mode, min_active_count));
  }
  return report;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

constexpr const char* kHeader = "method,d,p_coordination,seed,sample_index,value";

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << kHeader << '\n';
  return out;
}

}  // namespace

void write_report_csv(const EvaluationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto nodes = open_csv(dir / "node_counts.csv");
  auto ari = open_csv(dir / "ari.csv");
  auto tree = open_csv(dir / "tree_success.csv");
  for (const auto& r : report.records) {
    const std::string prefix = r.method + "," + std::to_string(r.dim) + "," + format_double(r.p_coordination) + "," +
                               std::to_string(r.seed) + "," + std::to_string(r.sample_index) + ",";
    nodes << prefix << r.outcome.active_count << '\n';
    ari << prefix << format_double(r.outcome.ari) << '\n';
    tree << prefix << (r.outcome.eligible ? (r.outcome.success ? "1" : "0") : "NA") << '\n';
  }

  // One line per (method, d, p) group.
  std::map<std::tuple<std::string, int, double>, EvaluationReport> groups;
  for (const auto& r : report.records) groups[{r.method, r.dim, r.p_coordination}].records.push_back(r);
  std::ofstream summary(dir / "summary.csv");
  if (!summary) throw FormatError("cannot write " + (dir / "summary.csv").string());
  summary << "method,d,p_coordination,samples,mean_ari,median_ari,mode_node_count,eligible,successes,success_rate\n";
  for (const auto& [key, group] : groups) {
    const auto aris = group.ari_values();
    double mean = 0.0;
    for (double v : aris) mean += v;
    mean /= static_cast<double>(aris.size());
    const auto hist = group.node_count_histogram();
    const auto mode = std::max_element(hist.begin(), hist.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    const auto rate = group.success_rate();
    summary << std::get<0>(key) << ',' << std::get<1>(key) << ',' << format_double(std::get<2>(key)) << ','
            << aris.size() << ',' << format_double(mean) << ',' << format_double(median(aris)) << ','
            << mode->first << ',' << group.eligible_count() << ',' << group.success_count() << ','
            << (rate ? format_double(*rate) : "NA") << '\n';
  }
}

namespace {

struct CsvRow {
  std::string method;
  int dim;
  double p;
  std::uint64_t seed;
  int sample_index;
  std::string value;
};

std::vector<CsvRow> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kHeader) throw FormatError(path.string() + ": unexpected header '" + line + "'");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6) throw FormatError(path.string() + ": malformed row '" + line + "'");
    try {
      rows.push_back({fields[0], std::stoi(fields[1]), std::stod(fields[2]), std::stoull(fields[3]),
                      std::stoi(fields[4]), fields[5]});
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": malformed row '" + line + "'");
    }
  }
  return rows;
}

}  // namespace

EvaluationReport read_report_csv(const std::filesystem::path& dir) {
  const auto nodes = read_rows(dir / "node_counts.csv");
  const auto ari = read_rows(dir / "ari.csv");
  const auto tree = read_rows(dir / "tree_success.csv");
  if (nodes.size() != ari.size() || nodes.size() != tree.size()) {
    throw FormatError("report CSV files in " + dir.string() + " have different row counts");
  }
  EvaluationReport report;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    SampleRecord r{nodes[i].method, nodes[i].dim, nodes[i].p, nodes[i].seed, nodes[i].sample_index, {}};
    r.outcome.active_count = std::stoi(nodes[i].value);
    r.outcome.ari = std::stod(ari[i].value);
    r.outcome.eligible = tree[i].value != "NA";
    r.outcome.success = tree[i].value == "1";
    report.records.push_back(std::move(r));
  }
  return report;
}

}  // namespace bodyschema
