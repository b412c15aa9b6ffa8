#pragma once
// Independent reference implementations used as test oracles. Each one is
// deliberately naive and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Rand-style pair counting over all n(n-1)/2 pairs.
inline double pair_counting_ari(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  double both = 0, only_a = 0, only_b = 0, neither = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j];
      const bool sb = b[i] == b[j];
      if (sa && sb) both += 1;
      else if (sa) only_a += 1;
      else if (sb) only_b += 1;
      else neither += 1;
    }
  }
  const double total = both + only_a + only_b + neither;
  const double pairs_a = both + only_a;
  const double pairs_b = both + only_b;
  const double expected = pairs_a * pairs_b / total;
  const double maximum = 0.5 * (pairs_a + pairs_b);
  if (maximum == expected) return (only_a == 0 && only_b == 0) ? 1.0 : 0.0;
  return (both - expected) / (maximum - expected);
}

// All labeled spanning trees on n vertices by Pruefer decoding.
inline std::vector<std::vector<std::pair<int, int>>> all_spanning_trees(int n) {
  std::vector<std::vector<std::pair<int, int>>> trees;
  if (n == 1) return {{}};
  if (n == 2) return {{{0, 1}}};
  const int len = n - 2;
  std::vector<int> seq(static_cast<std::size_t>(len), 0);
  while (true) {
    std::vector<int> degree(static_cast<std::size_t>(n), 1);
    for (int s : seq) ++degree[s];
    std::vector<std::pair<int, int>> edges;
    for (int s : seq) {
      for (int leaf = 0; leaf < n; ++leaf) {
        if (degree[leaf] == 1) {
          edges.emplace_back(std::min(leaf, s), std::max(leaf, s));
          --degree[leaf];
          --degree[s];
          break;
        }
      }
    }
    int u = -1, v = -1;
    for (int k = 0; k < n; ++k) {
      if (degree[k] == 1) (u < 0 ? u : v) = k;
    }
    edges.emplace_back(u, v);
    std::sort(edges.begin(), edges.end());
    trees.push_back(edges);
    int pos = len - 1;
    while (pos >= 0 && ++seq[pos] == n) seq[pos--] = 0;
    if (pos < 0) break;
  }
  return trees;
}

inline double edge_sum(const Eigen::MatrixXd& w, const std::vector<std::pair<int, int>>& edges) {
  double total = 0;
  for (const auto& [u, v] : edges) total += w(u, v);
  return total;
}

// Minimum-cost labeled spanning tree by exhaustive search.
inline std::pair<double, std::vector<std::pair<int, int>>> brute_force_mst(const Eigen::MatrixXd& w) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, int>> arg;
  for (const auto& t : all_spanning_trees(static_cast<int>(w.rows()))) {
    const double c = edge_sum(w, t);
    if (c < best) {
      best = c;
      arg = t;
    }
  }
  return {best, arg};
}

// Largest residual after the optimal rigid motion (rotation or reflection
// plus translation) that maps `y` onto `x`. Rows are points.
inline double procrustes_error(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(yc.transpose() * xc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd r = svd.matrixU() * svd.matrixV().transpose();
  return (yc * r - xc).cwiseAbs().maxCoeff();
}

inline Eigen::MatrixXd euclidean_distances(const Eigen::MatrixXd& p) {
  const auto n = p.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (p.row(i) - p.row(j)).norm();
  return d;
}

// H(column symbol | row symbol) straight from the definition.
inline double conditional_entropy_rows_given(const Eigen::MatrixXd& counts) {
  const double total = counts.sum();
  double h = 0;
  for (Eigen::Index x = 0; x < counts.rows(); ++x) {
    double row = 0;
    for (Eigen::Index y = 0; y < counts.cols(); ++y) row += counts(x, y);
    for (Eigen::Index y = 0; y < counts.cols(); ++y) {
      if (counts(x, y) == 0) continue;
      const double pxy = counts(x, y) / total;
      h -= pxy * std::log2(counts(x, y) / row);
    }
  }
  return h;
}

inline Eigen::MatrixXd random_spd(int d, std::mt19937_64& rng, double jitter = 0.1) {
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = n(rng);
  return a * a.transpose() + jitter * Eigen::MatrixXd::Identity(d, d);
}

inline double log_normal_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  const auto d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2 * 3.14159265358979323846) + std::log(cov.determinant()) +
                 (x - mean).dot(cov.inverse() * (x - mean)));
}

// Joint edge cost from the definition: q* by direct inversion, then two log densities.
inline double edge_cost(const Eigen::VectorXd& ma, const Eigen::MatrixXd& ca, const Eigen::VectorXd& mb,
                        const Eigen::MatrixXd& cb) {
  const Eigen::MatrixXd pa = ca.inverse(), pb = cb.inverse();
  const Eigen::VectorXd q = (pa + pb).inverse() * (pa * ma + pb * mb);
  return -(log_normal_pdf(q, ma, ca) + log_normal_pdf(q, mb, cb));
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bodyschema_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
