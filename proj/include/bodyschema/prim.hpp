#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace bodyschema {

// Dense-graph Prim's algorithm, O(V^2). `weights` is a symmetric V x V
// matrix (diagonal ignored). Returns the parent of every vertex in the tree
// grown from `root` (-1 for the root). Ties go to the lowest vertex index.
template <typename Derived>
std::vector<int> prim_mst(const Eigen::MatrixBase<Derived>& weights, int root = 0) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(weights.rows());
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  if (n == 0) return parent;
  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  std::vector<Scalar> best(static_cast<std::size_t>(n), std::numeric_limits<Scalar>::infinity());
  best[root] = Scalar(0);
  for (int step = 0; step < n; ++step) {
    int u = -1;
    for (int v = 0; v < n; ++v) {
      if (!in_tree[v] && (u < 0 || best[v] < best[u])) u = v;
    }
    in_tree[u] = true;
    for (int v = 0; v < n; ++v) {
      if (!in_tree[v] && weights(u, v) < best[v]) {
        best[v] = weights(u, v);
        parent[v] = u;
      }
    }
  }
  parent[root] = -1;
  return parent;
}

// Total weight of the edges (v, parent[v]).
template <typename Derived>
typename Derived::Scalar tree_weight(const Eigen::MatrixBase<Derived>& weights, const std::vector<int>& parent) {
  typename Derived::Scalar total(0);
  for (std::size_t v = 0; v < parent.size(); ++v) {
    if (parent[v] >= 0) total += weights(static_cast<Eigen::Index>(v), parent[v]);
  }
  return total;
}

}  // namespace bodyschema
