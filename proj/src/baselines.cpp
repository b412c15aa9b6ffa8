#include "bodyschema/baselines.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "bodyschema/errors.hpp"
#include "bodyschema/gaussian.hpp"

namespace bodyschema {

namespace {

void check_k(const Eigen::MatrixXd& data, int k) {
  if (k < 1 || k > data.rows()) {
    throw ConfigError("cluster count " + std::to_string(k) + " outside [1, " + std::to_string(data.rows()) + "]");
  }
}

Eigen::MatrixXd kmeans_pp_seeds(const Eigen::MatrixXd& data, int k, Rng& rng) {
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd centers(k, data.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = data.row(first(rng));
  Eigen::VectorXd d2 = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double u = unit(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = data.row(pick);
    d2 = d2.cwiseMin((data.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

KMeansResult lloyd(const Eigen::MatrixXd& data, Eigen::MatrixXd centers) {
  const Eigen::Index n = data.rows();
  const int k = static_cast<int>(centers.rows());
  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    Eigen::VectorXd best_d2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      best_d2[i] = (centers.rowwise() - data.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (res.labels[i] != best) {
        res.labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(res.labels[i]) += data.row(i);
      ++counts[res.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // Empty cluster: move it to the point farthest from its center.
        Eigen::Index far = 0;
        best_d2.maxCoeff(&far);
        centers.row(c) = data.row(far);
        best_d2[far] = 0.0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  res.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) res.inertia += (data.row(i) - centers.row(res.labels[i])).squaredNorm();
  res.centers = std::move(centers);
  return res;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& data, int k, std::uint64_t seed, int restarts) {
  check_k(data, k);
  Rng rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    auto res = lloyd(data, kmeans_pp_seeds(data, k, rng));
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

Partition gmm_em(const Eigen::MatrixXd& data, int k, std::uint64_t seed, const GmmOptions& opts) {
  check_k(data, k);
  const Eigen::Index n = data.rows();
  const auto init = kmeans(data, k, seed);

  const Eigen::RowVectorXd global_mean = data.colwise().mean();
  const Eigen::MatrixXd centered_all = data.rowwise() - global_mean;
  Eigen::MatrixXd global_cov = centered_all.transpose() * centered_all / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  global_cov.diagonal().array() += opts.covariance_floor;

  // Responsibilities from the k-means labels.
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) resp(i, init.labels[i]) = 1.0;

  std::vector<Gaussian<double>> comps(static_cast<std::size_t>(k));
  Eigen::VectorXd weights(k);
  Eigen::MatrixXd logp(n, k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // M step.
    for (int c = 0; c < k; ++c) {
      const double nk = resp.col(c).sum();
      if (nk < 1e-10) {
        // Degenerate component: re-seed at the worst explained point.
        Eigen::Index far = 0;
        if (iter > 0) {
          logp.rowwise().maxCoeff().minCoeff(&far);
        } else {
          (data.rowwise() - init.centers.row(c)).rowwise().squaredNorm().maxCoeff(&far);
        }
        comps[c] = Gaussian<double>::from_covariance(data.row(far).transpose(), global_cov);
        weights[c] = 1.0 / static_cast<double>(n);
        continue;
      }
      const Eigen::VectorXd mean = (resp.col(c).transpose() * data).transpose() / nk;
      const Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
      Eigen::MatrixXd cov = centered.transpose() * resp.col(c).asDiagonal() * centered / nk;
      cov.diagonal().array() += opts.covariance_floor;
      comps[c] = Gaussian<double>::from_covariance(mean, 0.5 * (cov + cov.transpose()));
      weights[c] = nk / static_cast<double>(n);
    }
    weights /= weights.sum();

    // E step.
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < k; ++c) logp(i, c) = std::log(weights[c]) + comps[c].log_density(data.row(i).transpose());
      const double top = logp.row(i).maxCoeff();
      const double lse = top + std::log((logp.row(i).array() - top).exp().sum());
      resp.row(i) = (logp.row(i).array() - lse).exp();
      ll += lse;
    }
    if (std::abs(ll - prev_ll) <= opts.tolerance * std::abs(ll)) break;
    prev_ll = ll;
  }

  Partition labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    resp.row(i).maxCoeff(&best);
    labels[i] = static_cast<int>(best);
  }
  return labels;
}

Partition ward(const Eigen::MatrixXd& data, int k) {
  check_k(data, k);
  const Eigen::Index n = data.rows();
  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) dist.row(i) = (data.rowwise() - data.row(i)).rowwise().squaredNorm().transpose();

  std::vector<int> size(static_cast<std::size_t>(n), 1);
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  std::vector<int> owner(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) owner[i] = static_cast<int>(i);

  for (Eigen::Index clusters = n; clusters > k; --clusters) {
    Eigen::Index bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (alive[j] && dist(i, j) < best) {
          best = dist(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    // Lance-Williams update for Ward linkage, merging bj into bi.
    const double ni = size[bi], nj = size[bj];
    for (Eigen::Index m = 0; m < n; ++m) {
      if (!alive[m] || m == bi || m == bj) continue;
      const double nm = size[m];
      const double updated = ((ni + nm) * dist(bi, m) + (nj + nm) * dist(bj, m) - nm * dist(bi, bj)) / (ni + nj + nm);
      dist(bi, m) = dist(m, bi) = updated;
    }
    size[bi] += size[bj];
    alive[bj] = false;
    for (auto& o : owner) {
      if (o == bj) o = static_cast<int>(bi);
    }
  }
  // Compact labels 0..k-1 in order of first appearance.
  std::map<int, int> compact;
  Partition labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    labels[i] = compact.emplace(owner[i], static_cast<int>(compact.size())).first->second;
  }
  return labels;
}

}  // namespace bodyschema
