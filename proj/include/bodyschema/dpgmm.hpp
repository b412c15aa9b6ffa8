#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bodyschema/gaussian.hpp"

namespace bodyschema {

using Rng = std::mt19937_64;
using Component = Gaussian<double>;

enum class SamplerMode {
  kDpgmmLj,  // mixture with latent joints and a latent tree
  kDpgmm,    // plain weak-limit mixture (baseline)
};

std::string to_string(SamplerMode mode);
SamplerMode parse_sampler_mode(const std::string& text);

// Normal-Wishart prior: Lambda ~ W(V0^-1, nu0), mu | Lambda ~ N(m0, (k0 Lambda)^-1).
// V0 is the prior scatter matrix, so E[Sigma] = V0 / (nu0 - d - 1).
struct Hyperparameters {
  double gamma = 1.0;
  Eigen::VectorXd m0;
  double k0 = 0.01;
  Eigen::MatrixXd V0;
  double nu0 = 0.0;
  int k_max = 10;

  // Throws ConfigError when a positivity or definiteness constraint fails.
  void validate(Eigen::Index dim) const;
};

// Data-adaptive defaults: m0 = data mean, nu0 = d + nu0_offset and
// V0 = v0_scale * (data covariance + floor * I).
struct HyperparameterDefaults {
  double gamma = 1.0;
  double k0 = 0.01;
  double nu0_offset = 2.0;
  std::optional<double> v0_scale;  // defaults to nu0
  int k_max = 10;
};

Hyperparameters default_hyperparameters(const Eigen::MatrixXd& data, const HyperparameterDefaults& opts = {});

// Parent links over the active components. parent[k] is kRoot for the root,
// the parent component for other active components and kAbsent otherwise.
struct TreeStructure {
  static constexpr int kRoot = -1;
  static constexpr int kAbsent = -2;

  std::vector<int> parent;
  std::vector<int> active;  // ascending component ids

  bool empty() const { return active.empty(); }
  int root() const;
  // (child, parent) for every non-root active component.
  std::vector<std::pair<int, int>> edges() const;
  // Throws StructureError unless the links form a single rooted tree over `active`.
  void validate() const;
};

struct MixtureState {
  Eigen::VectorXd pi;
  std::vector<int> z;  // 0-based component ids
  std::vector<Component> components;
  std::map<int, Eigen::VectorXd> joints;  // keyed by child component
  TreeStructure tree;

  int k_max() const { return static_cast<int>(components.size()); }
  std::vector<int> counts() const;
  // Throws StateError/StructureError on any violated invariant.
  void validate(SamplerMode mode) const;
};

struct ChainSample {
  MixtureState state;
  int iteration = 0;
  double log_joint = 0.0;
};

// Where the initial component parameters come from: the prior, or the
// posterior given the initial random assignments.
enum class InitParams { kPrior, kAssigned };

struct SamplerOptions {
  SamplerMode mode = SamplerMode::kDpgmmLj;
  InitParams init = InitParams::kAssigned;
  int min_active_count = 2;  // occupancy needed for a component to count as a body part
  bool debug_checks = false;
};

// Components with at least `min_count` assigned points. When none qualifies,
// the most populated component (lowest id on ties) is returned alone.
std::vector<int> active_components(std::span<const int> z, int k_max, int min_count);

MixtureState init_state(const Eigen::MatrixXd& data, const Hyperparameters& hp, std::uint64_t seed,
                        const SamplerOptions& opts = {});

// Points plus, in latent-joint mode, every joint touching the component.
struct AugmentedStatistics {
  int count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;  // sum of outer products about `mean`
};

AugmentedStatistics augmented_statistics(const MixtureState& state, const Eigen::MatrixXd& data, int component,
                                         SamplerMode mode);

// One joint draw (Lambda, mu) from the normal-Wishart posterior.
Component sample_normal_wishart(const Hyperparameters& hp, const AugmentedStatistics& stats, Rng& rng);

void sample_assignments(MixtureState& state, const Eigen::MatrixXd& data, Rng& rng);
void sample_component_params(MixtureState& state, const Eigen::MatrixXd& data, const Hyperparameters& hp, Rng& rng,
                             SamplerMode mode = SamplerMode::kDpgmmLj);
void sample_joint_points(MixtureState& state, Rng& rng);
void sample_weights(MixtureState& state, const Hyperparameters& hp, Rng& rng);
void update_tree(MixtureState& state, Rng& rng, int min_active_count = 2);

// -log[N(q*|a) N(q*|b)] at the maximizer q* of the product density.
double joint_edge_cost(const Component& a, const Component& b);

// Edge costs among `nodes` (indices into `components`).
Eigen::MatrixXd joint_cost_matrix(const std::vector<Component>& components, std::span<const int> nodes);

// Sum of joint_edge_cost over the tree's edges.
double tree_cost(const std::vector<Component>& components, const TreeStructure& tree);

// Log joint density of data and latent variables given the tree, up to an
// additive constant that depends only on hyperparameters.
double log_joint(const MixtureState& state, const Eigen::MatrixXd& data, const Hyperparameters& hp, SamplerMode mode);

struct ChainOptions {
  int iterations = 1000;
  int burn_in = 500;
  std::uint64_t seed = 1;
  SamplerOptions sampler;
};

// Gibbs sweeps; samples after burn-in are snapshotted. Numeric failures are
// rethrown as NumericError carrying the iteration index.
std::vector<ChainSample> run_chain(const Eigen::MatrixXd& data, const Hyperparameters& hp, const ChainOptions& opts);

}  // namespace bodyschema
