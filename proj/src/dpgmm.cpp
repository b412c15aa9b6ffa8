#include "bodyschema/dpgmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "bodyschema/errors.hpp"
#include "bodyschema/prim.hpp"

namespace bodyschema {

std::string to_string(SamplerMode mode) { return mode == SamplerMode::kDpgmm ? "dpgmm" : "dpgmm_lj"; }

SamplerMode parse_sampler_mode(const std::string& text) {
  if (text == "dpgmm") return SamplerMode::kDpgmm;
  if (text == "dpgmm_lj" || text == "dpgmm-lj") return SamplerMode::kDpgmmLj;
  throw ConfigError("unknown sampler mode '" + text + "' (expected dpgmm or dpgmm_lj)");
}

void Hyperparameters::validate(Eigen::Index dim) const {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(k0 > 0.0)) throw ConfigError("k0 must be positive");
  if (k_max < 1) throw ConfigError("k_max must be at least 1");
  if (m0.size() != dim) throw ConfigError("m0 dimension does not match the data");
  if (V0.rows() != dim || V0.cols() != dim) throw ConfigError("V0 dimension does not match the data");
  if (!(nu0 > static_cast<double>(dim) - 1.0)) throw ConfigError("nu0 must exceed d - 1");
  if ((V0 - V0.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, V0.cwiseAbs().maxCoeff())) {
    throw ConfigError("V0 must be symmetric");
  }
  if (Eigen::LLT<Eigen::MatrixXd>(V0).info() != Eigen::Success) throw ConfigError("V0 must be positive definite");
}

Hyperparameters default_hyperparameters(const Eigen::MatrixXd& data, const HyperparameterDefaults& opts) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  Hyperparameters hp;
  hp.gamma = opts.gamma;
  hp.k0 = opts.k0;
  hp.k_max = opts.k_max;
  hp.nu0 = static_cast<double>(d) + opts.nu0_offset;
  hp.m0 = n > 0 ? Eigen::VectorXd(data.colwise().mean().transpose()) : Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  if (n > 1) {
    const Eigen::MatrixXd centered = data.rowwise() - hp.m0.transpose();
    cov = centered.transpose() * centered / static_cast<double>(n - 1);
  }
  // Degenerate data (e.g. a body map with every sensor silent) still needs an SPD scale.
  const double mean_var = cov.trace() / static_cast<double>(d);
  const double floor = mean_var > 0.0 ? 1e-6 * mean_var : 1e-6;
  cov.diagonal().array() += floor;
  hp.V0 = opts.v0_scale.value_or(hp.nu0) * cov;
  return hp;
}

int TreeStructure::root() const {
  for (int k : active) {
    if (parent[k] == kRoot) return k;
  }
  return kAbsent;
}

std::vector<std::pair<int, int>> TreeStructure::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int k : active) {
    if (parent[k] >= 0) out.emplace_back(k, parent[k]);
  }
  return out;
}

void TreeStructure::validate() const {
  if (active.empty()) throw StructureError("tree has no active components");
  const std::set<int> members(active.begin(), active.end());
  int roots = 0;
  for (int k : active) {
    if (k < 0 || k >= static_cast<int>(parent.size())) throw StructureError("active component id out of range");
    if (parent[k] == kRoot) {
      ++roots;
    } else if (!members.contains(parent[k])) {
      throw StructureError("component " + std::to_string(k) + " links to a non-active parent");
    }
  }
  if (roots != 1) throw StructureError("tree must have exactly one root, found " + std::to_string(roots));
  for (int k : active) {
    int cur = k;
    for (std::size_t steps = 0; parent[cur] != kRoot; ++steps) {
      if (steps > active.size()) throw StructureError("tree contains a cycle");
      cur = parent[cur];
    }
  }
}

std::vector<int> MixtureState::counts() const {
  std::vector<int> n(components.size(), 0);
  for (int k : z) ++n[k];
  return n;
}

void MixtureState::validate(SamplerMode mode) const {
  const auto k_max = static_cast<Eigen::Index>(components.size());
  if (pi.size() != k_max) throw StateError("mixing weights size differs from component count");
  if ((pi.array() < 0.0).any() || std::abs(pi.sum() - 1.0) > 1e-12) throw StateError("mixing weights are not on the simplex");
  for (int k : z) {
    if (k < 0 || k >= k_max) throw StateError("assignment out of range");
  }
  for (const auto& c : components) {
    if (!c.mean.allFinite() || Eigen::LLT<Eigen::MatrixXd>(c.covariance).info() != Eigen::Success) {
      throw StateError("component covariance is not SPD");
    }
  }
  if (mode == SamplerMode::kDpgmm) return;
  tree.validate();
  const auto edges = tree.edges();
  if (joints.size() != edges.size()) throw StateError("joint count differs from tree edge count");
  for (const auto& [child, parent] : edges) {
    auto it = joints.find(child);
    if (it == joints.end()) throw StateError("missing joint for component " + std::to_string(child));
    if (!it->second.allFinite()) throw StateError("non-finite joint position");
  }
}

std::vector<int> active_components(std::span<const int> z, int k_max, int min_count) {
  std::vector<int> counts(static_cast<std::size_t>(k_max), 0);
  for (int k : z) ++counts[k];
  std::vector<int> active;
  for (int k = 0; k < k_max; ++k) {
    if (counts[k] >= min_count) active.push_back(k);
  }
  if (active.empty() && !z.empty()) {
    active.push_back(static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin()));
  }
  return active;
}

namespace {

int largest_component(const std::vector<int>& active, const std::vector<int>& counts) {
  int best = active.front();
  for (int k : active) {
    if (counts[k] > counts[best]) best = k;
  }
  return best;
}

// Prim over `active` with the given costs, rooted at the most populated component.
TreeStructure spanning_tree(const Eigen::MatrixXd& costs, const std::vector<int>& active,
                            const std::vector<int>& counts, int k_max) {
  TreeStructure tree;
  tree.active = active;
  tree.parent.assign(static_cast<std::size_t>(k_max), TreeStructure::kAbsent);
  const int root = largest_component(active, counts);
  const int root_pos = static_cast<int>(std::find(active.begin(), active.end(), root) - active.begin());
  const auto links = prim_mst(costs, root_pos);
  for (std::size_t v = 0; v < active.size(); ++v) {
    tree.parent[active[v]] = links[v] < 0 ? TreeStructure::kRoot : active[links[v]];
  }
  return tree;
}

}  // namespace

MixtureState init_state(const Eigen::MatrixXd& data, const Hyperparameters& hp, std::uint64_t seed,
                        const SamplerOptions& opts) {
  if (data.rows() == 0) throw ConfigError("cannot initialize a sampler on empty data");
  hp.validate(data.cols());
  Rng rng(seed);
  MixtureState state;
  const int k_max = hp.k_max;
  state.pi = Eigen::VectorXd::Constant(k_max, 1.0 / k_max);
  std::uniform_int_distribution<int> pick(0, k_max - 1);
  state.z.resize(static_cast<std::size_t>(data.rows()));
  for (auto& zi : state.z) zi = pick(rng);

  const AugmentedStatistics empty{0, Eigen::VectorXd::Zero(data.cols()), Eigen::MatrixXd::Zero(data.cols(), data.cols())};
  state.components.reserve(static_cast<std::size_t>(k_max));
  for (int k = 0; k < k_max; ++k) {
    state.components.push_back(sample_normal_wishart(
        hp, opts.init == InitParams::kPrior ? empty : augmented_statistics(state, data, k, SamplerMode::kDpgmm), rng));
  }

  if (opts.mode == SamplerMode::kDpgmmLj) {
    const auto active = active_components(state.z, k_max, opts.min_active_count);
    Eigen::MatrixXd costs(active.size(), active.size());
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t b = 0; b < active.size(); ++b) {
        costs(a, b) = (state.components[active[a]].mean - state.components[active[b]].mean).norm();
      }
    }
    state.tree = spanning_tree(costs, active, state.counts(), k_max);
    for (const auto& [child, parent] : state.tree.edges()) {
      state.joints[child] = 0.5 * (state.components[child].mean + state.components[parent].mean);
    }
  }
  return state;
}

AugmentedStatistics augmented_statistics(const MixtureState& state, const Eigen::MatrixXd& data, int component,
                                         SamplerMode mode) {
  const Eigen::Index d = data.cols();
  AugmentedStatistics stats{0, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    if (state.z[i] != component) continue;
    sum += data.row(i).transpose();
    ++stats.count;
  }
  std::vector<Eigen::VectorXd> extra;
  if (mode == SamplerMode::kDpgmmLj) {
    for (const auto& [child, parent] : state.tree.edges()) {
      if (child == component || parent == component) {
        const auto it = state.joints.find(child);
        if (it == state.joints.end()) continue;
        extra.push_back(it->second);
        sum += it->second;
        ++stats.count;
      }
    }
  }
  if (stats.count == 0) return stats;
  stats.mean = sum / stats.count;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    if (state.z[i] != component) continue;
    const Eigen::VectorXd diff = data.row(i).transpose() - stats.mean;
    stats.scatter.noalias() += diff * diff.transpose();
  }
  for (const auto& q : extra) {
    const Eigen::VectorXd diff = q - stats.mean;
    stats.scatter.noalias() += diff * diff.transpose();
  }
  return stats;
}

Component sample_normal_wishart(const Hyperparameters& hp, const AugmentedStatistics& stats, Rng& rng) {
  const double n = stats.count;
  const double kn = hp.k0 + n;
  const double nun = hp.nu0 + n;
  Eigen::VectorXd mn = hp.m0;
  Eigen::MatrixXd vn = hp.V0;
  if (stats.count > 0) {
    mn = (hp.k0 * hp.m0 + n * stats.mean) / kn;
    const Eigen::VectorXd shift = stats.mean - hp.m0;
    vn += stats.scatter + (hp.k0 * n / kn) * shift * shift.transpose();
  }
  vn = 0.5 * (vn + vn.transpose());
  const auto vn_llt = robust_cholesky<double>(vn, "posterior scatter matrix");
  const Eigen::MatrixXd scale = vn_llt.solve(Eigen::MatrixXd::Identity(vn.rows(), vn.cols()));
  const Eigen::MatrixXd lambda = sample_wishart<double>(0.5 * (scale + scale.transpose()), nun, rng);
  Eigen::VectorXd mu = sample_normal_precision<double>(mn, (kn * lambda).eval(), rng);
  return Component::from_precision(std::move(mu), lambda);
}

void sample_assignments(MixtureState& state, const Eigen::MatrixXd& data, Rng& rng) {
  const int k_max = state.k_max();
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd logw(n, k_max);
  const Eigen::ArrayXd log_pi = state.pi.array().log();
  // All z_i are conditionally independent given (pi, mu, Sigma), so the
  // log weights form one blocked update; draws stay sequential on one stream.
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < k_max; ++k) {
      logw(i, k) = std::isinf(log_pi[k]) ? -std::numeric_limits<double>::infinity()
                                         : log_pi[k] + state.components[k].log_density(data.row(i).transpose());
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd prob(k_max);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = logw.row(i).maxCoeff();
    if (!std::isfinite(top)) {
      throw NumericError("every component density underflows for data point " + std::to_string(i));
    }
    prob = (logw.row(i).array() - top).exp().transpose();
    const double u = unit(rng) * prob.sum();
    double acc = 0.0;
    int chosen = k_max - 1;
    for (int k = 0; k < k_max; ++k) {
      acc += prob[k];
      if (u < acc) {
        chosen = k;
        break;
      }
    }
    // Guard against landing on a zero-probability tail component through rounding.
    while (prob[chosen] == 0.0 && chosen > 0) --chosen;
    state.z[i] = chosen;
  }
}

void sample_component_params(MixtureState& state, const Eigen::MatrixXd& data, const Hyperparameters& hp, Rng& rng,
                             SamplerMode mode) {
  for (int k = 0; k < state.k_max(); ++k) {
    const auto stats = augmented_statistics(state, data, k, mode);
    state.components[k] = sample_normal_wishart(hp, stats, rng);
  }
}

void sample_joint_points(MixtureState& state, Rng& rng) {
  for (const auto& [child, parent] : state.tree.edges()) {
    const auto product = gaussian_product(state.components[child], state.components[parent]);
    state.joints[child] = sample_normal_precision<double>(product.mean, product.precision, rng);
  }
}

void sample_weights(MixtureState& state, const Hyperparameters& hp, Rng& rng) {
  const auto counts = state.counts();
  Eigen::VectorXd alpha(state.k_max());
  for (int k = 0; k < state.k_max(); ++k) alpha[k] = hp.gamma / hp.k_max + counts[k];
  state.pi = sample_dirichlet<double>(alpha, rng);
}

double joint_edge_cost(const Component& a, const Component& b) {
  const auto product = gaussian_product(a, b);
  return -(a.log_density(product.mean) + b.log_density(product.mean));
}

Eigen::MatrixXd joint_cost_matrix(const std::vector<Component>& components, std::span<const int> nodes) {
  const auto s = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd costs = Eigen::MatrixXd::Zero(s, s);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = a + 1; b < s; ++b) {
      costs(a, b) = costs(b, a) = joint_edge_cost(components[nodes[a]], components[nodes[b]]);
    }
  }
  return costs;
}

double tree_cost(const std::vector<Component>& components, const TreeStructure& tree) {
  double total = 0.0;
  for (const auto& [child, parent] : tree.edges()) total += joint_edge_cost(components[child], components[parent]);
  return total;
}

void update_tree(MixtureState& state, Rng& rng, int min_active_count) {
  const auto active = active_components(state.z, state.k_max(), min_active_count);
  if (active.empty()) throw StateError("tree update needs at least one active component");
  const Eigen::MatrixXd costs = joint_cost_matrix(state.components, active);
  TreeStructure next = spanning_tree(costs, active, state.counts(), state.k_max());

  // Joint points are tied to undirected edges; keep those whose edge survives.
  std::map<std::pair<int, int>, Eigen::VectorXd> previous;
  for (const auto& [child, parent] : state.tree.edges()) {
    const auto it = state.joints.find(child);
    if (it != state.joints.end()) previous[std::minmax(child, parent)] = it->second;
  }
  std::map<int, Eigen::VectorXd> joints;
  for (const auto& [child, parent] : next.edges()) {
    const auto it = previous.find(std::minmax(child, parent));
    if (it != previous.end()) {
      joints[child] = it->second;
    } else {
      const auto product = gaussian_product(state.components[child], state.components[parent]);
      joints[child] = sample_normal_precision<double>(product.mean, product.precision, rng);
    }
  }
  state.tree = std::move(next);
  state.joints = std::move(joints);
}

double log_joint(const MixtureState& state, const Eigen::MatrixXd& data, const Hyperparameters& hp, SamplerMode mode) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const int k = state.z[i];
    total += std::log(state.pi[k]) + state.components[k].log_density(data.row(i).transpose());
  }
  if (mode == SamplerMode::kDpgmmLj) {
    for (const auto& [child, parent] : state.tree.edges()) {
      const auto& q = state.joints.at(child);
      total += state.components[child].log_density(q) + state.components[parent].log_density(q);
    }
  }
  // Dirichlet prior on pi (weak limit) and normal-Wishart prior on each component.
  const double alpha = hp.gamma / hp.k_max;
  total += (alpha - 1.0) * state.pi.array().log().sum();
  const double d = static_cast<double>(hp.m0.size());
  for (const auto& c : state.components) {
    const Eigen::VectorXd diff = c.mean - hp.m0;
    const double log_det_lambda = -c.log_det_covariance;
    total += 0.5 * (d * std::log(hp.k0) + log_det_lambda) - 0.5 * hp.k0 * diff.dot(c.precision * diff);
    total += 0.5 * (hp.nu0 - d - 1.0) * log_det_lambda - 0.5 * (hp.V0.cwiseProduct(c.precision)).sum();
  }
  return total;
}

std::vector<ChainSample> run_chain(const Eigen::MatrixXd& data, const Hyperparameters& hp, const ChainOptions& opts) {
  if (!(opts.iterations > opts.burn_in && opts.burn_in >= 0)) {
    throw ConfigError("iterations must exceed burn_in, and burn_in must be non-negative");
  }
  const SamplerMode mode = opts.sampler.mode;
  MixtureState state = init_state(data, hp, opts.seed, opts.sampler);
  // Separate stream from initialization so init and sweeps do not overlap.
  Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<ChainSample> samples;
  samples.reserve(static_cast<std::size_t>(opts.iterations - opts.burn_in));
  for (int it = 1; it <= opts.iterations; ++it) {
    try {
      sample_assignments(state, data, rng);
      sample_component_params(state, data, hp, rng, mode);
      if (mode == SamplerMode::kDpgmmLj) sample_joint_points(state, rng);
      sample_weights(state, hp, rng);
      if (mode == SamplerMode::kDpgmmLj) update_tree(state, rng, opts.sampler.min_active_count);
      if (opts.sampler.debug_checks) state.validate(mode);
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(it) + ": " + e.what());
    }
    if (it > opts.burn_in) samples.push_back({state, it, log_joint(state, data, hp, mode)});
  }
  return samples;
}

}  // namespace bodyschema
