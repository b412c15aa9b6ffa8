#include "bodyschema/body_map.hpp"

#include <cmath>

#include "bodyschema/errors.hpp"

namespace bodyschema {

JointHistogram JointHistogram::from_channels(
    const Eigen::Ref<const Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>>& first,
    const Eigen::Ref<const Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>>& second, int n_levels, int stride) {
  if (first.size() != second.size()) throw ValidationError("channels differ in length");
  if (stride < 1) throw ConfigError("stride must be at least 1");
  JointHistogram h;
  h.counts.setZero(n_levels, n_levels);
  for (Eigen::Index t = 0; t < first.size(); t += stride) {
    const int x = first[t] - 1;
    const int y = second[t] - 1;
    if (x < 0 || y < 0 || x >= n_levels || y >= n_levels) throw ValidationError("quantized level out of range");
    ++h.counts(x, y);
    ++h.total;
  }
  return h;
}

double conditional_entropy(const JointHistogram& hist, Conditioning which) {
  if (hist.total <= 0) throw DomainError("conditional entropy of an empty histogram");
  // H(B | A) = -sum p(a, b) log2 p(a, b) / p(a), with A the conditioning side.
  const bool rows_condition = which == Conditioning::kSecondGivenFirst;
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> marginal =
      rows_condition ? hist.counts.rowwise().sum().eval() : hist.counts.colwise().sum().transpose().eval();
  const double total = static_cast<double>(hist.total);
  double h = 0.0;
  for (Eigen::Index r = 0; r < hist.counts.rows(); ++r) {
    for (Eigen::Index c = 0; c < hist.counts.cols(); ++c) {
      const auto n = hist.counts(r, c);
      if (n == 0) continue;
      const auto cond = marginal[rows_condition ? r : c];
      h -= (static_cast<double>(n) / total) * std::log2(static_cast<double>(n) / static_cast<double>(cond));
    }
  }
  return h > 0.0 ? h : 0.0;  // -0.0 and rounding below zero
}

DistanceMatrix information_metric(const TactileLog& log, int stride) {
  if (!log.quantized) throw ValidationError("information metric needs a quantized tactile log");
  if (stride < 1) throw ConfigError("stride must be at least 1");
  const LevelMatrix& q = *log.quantized;
  const Eigen::Index m = q.rows();
  const int n_levels = log.n_levels;
  // Checked up front: an exception cannot escape the parallel loop.
  if (q.size() > 0 && (q.minCoeff() < 1 || q.maxCoeff() > n_levels)) {
    throw ValidationError("quantized level out of range");
  }
  DistanceMatrix out{Eigen::MatrixXd::Zero(m, m)};

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const auto hist = JointHistogram::from_channels(q.row(i), q.row(j), n_levels, stride);
      const double d = conditional_entropy(hist, Conditioning::kSecondGivenFirst) +
                       conditional_entropy(hist, Conditioning::kFirstGivenSecond);
      out.values(i, j) = d;
      out.values(j, i) = d;
    }
  }
  return out;
}

BodyMap mds_embed(const DistanceMatrix& dist, int dim) {
  const Eigen::Index m = dist.size();
  if (dist.values.cols() != m) throw ValidationError("distance matrix must be square");
  if (dim < 1 || dim > m - 1) {
    throw ConfigError("embedding dimension " + std::to_string(dim) + " outside [1, " + std::to_string(m - 1) + "]");
  }
  if (!dist.values.allFinite()) throw ValidationError("distance matrix has non-finite entries");
  const double scale = std::max(1.0, dist.values.cwiseAbs().maxCoeff());
  if ((dist.values - dist.values.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("distance matrix is not symmetric");
  }
  if (dist.values.diagonal().cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("distance matrix has a non-zero diagonal");
  }
  BodyMap map;
  map.dim = dim;
  map.points = classical_mds(dist.values, dim, &map.eigen_spectrum);
  return map;
}

}  // namespace bodyschema
