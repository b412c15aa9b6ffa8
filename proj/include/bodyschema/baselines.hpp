#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "bodyschema/metrics.hpp"

namespace bodyschema {

struct KMeansResult {
  Partition labels;
  Eigen::MatrixXd centers;  // K x d
  double inertia = 0.0;
};

// k-means++ seeding, Lloyd iterations, best inertia over `restarts` runs.
KMeansResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed, int restarts = 10);

struct GmmOptions {
  double tolerance = 1e-8;      // relative change of the log-likelihood
  int max_iterations = 1000;
  double covariance_floor = 1e-6;  // added to every covariance diagonal
};

// Full-covariance EM initialized from k-means; hard labels by responsibility.
Partition gmm_em(const Eigen::MatrixXd& data, int k, std::uint64_t seed, const GmmOptions& opts = {});

// Agglomerative Ward clustering (Lance-Williams on squared distances), cut at k clusters.
Partition ward(const Eigen::MatrixXd& data, int k);

}  // namespace bodyschema
