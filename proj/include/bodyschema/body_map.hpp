#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "bodyschema/simulation.hpp"

namespace bodyschema {

// Co-occurrence counts of the quantized symbols of two sensors; rows index
// the first sensor's level, columns the second's (0-based level - 1).
struct JointHistogram {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  std::int64_t total = 0;

  static JointHistogram from_channels(const Eigen::Ref<const Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>>& first,
                                      const Eigen::Ref<const Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>>& second,
                                      int n_levels, int stride = 1);
  JointHistogram transposed() const { return {counts.transpose(), total}; }
};

enum class Conditioning {
  kSecondGivenFirst,  // H(second | first)
  kFirstGivenSecond,  // H(first | second)
};

// Plug-in conditional entropy in bits. Throws DomainError on an empty histogram.
double conditional_entropy(const JointHistogram& hist, Conditioning which);

// Symmetric matrix of pairwise information distances [bits].
struct DistanceMatrix {
  Eigen::MatrixXd values;

  Eigen::Index size() const { return values.rows(); }
};

// D(i, j) = H(i | j) + H(j | i) over the quantized log, using every
// `stride`-th time step. Each unordered pair is evaluated once and mirrored.
DistanceMatrix information_metric(const TactileLog& log, int stride = 1);

// Sensors embedded in R^dim, one row per sensor.
struct BodyMap {
  Eigen::MatrixXd points;
  int dim = 0;
  Eigen::VectorXd eigen_spectrum;  // all double-centering eigenvalues, descending
};

// Classical (Torgerson) MDS. Throws ConfigError when dim is not in
// [1, M - 1] and ValidationError when the input is not a symmetric matrix
// with zero diagonal.
BodyMap mds_embed(const DistanceMatrix& dist, int dim);

// Works on any dense square matrix expression: B = -1/2 J D^2 J, top `dim`
// eigenpairs, coordinates scaled by sqrt(lambda); eigenvalues below
// M * eps * max|lambda| count as zero. Each eigenvector's
// first component with magnitude above 1e-12 is made positive.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> classical_mds(
    const Eigen::MatrixBase<Derived>& dist, int dim,
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>* spectrum = nullptr) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = dist.rows();
  const Mat squared = dist.cwiseAbs2();
  const Mat centering = Mat::Identity(n, n) - Mat::Constant(n, n, Scalar(1) / Scalar(n));
  const Mat b = Scalar(-0.5) * centering * squared * centering;
  Eigen::SelfAdjointEigenSolver<Mat> eig(b);
  const auto& values = eig.eigenvalues();   // ascending
  const auto& vectors = eig.eigenvectors();
  // Eigenvalues at roundoff level are zero; their square roots would be noise.
  const Scalar floor = Scalar(n) * Eigen::NumTraits<Scalar>::epsilon() * std::max(values.cwiseAbs().maxCoeff(), Scalar(1));
  Mat coords(n, dim);
  for (int k = 0; k < dim; ++k) {
    const Eigen::Index src = n - 1 - k;
    auto v = vectors.col(src);
    Scalar sign(1);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (std::abs(v[r]) > Scalar(1e-12)) {
        sign = v[r] > Scalar(0) ? Scalar(1) : Scalar(-1);
        break;
      }
    }
    const Scalar lambda = values[src];
    coords.col(k) = lambda > floor ? (sign * std::sqrt(lambda) * v).eval()
                                       : Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n).eval();
  }
  if (spectrum != nullptr) *spectrum = values.reverse();
  return coords;
}

}  // namespace bodyschema
