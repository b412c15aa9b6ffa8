#include <doctest.h>

#include <cmath>
#include <random>

#include "bodyschema/body_map.hpp"
#include "bodyschema/errors.hpp"
#include "oracles.hpp"

using namespace bodyschema;

namespace {

using Channel = Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>;

TactileLog log_from(const LevelMatrix& q, int n_levels) {
  TactileLog log;
  log.quantized = q;
  log.n_levels = n_levels;
  return log;
}

LevelMatrix random_levels(Eigen::Index m, Eigen::Index t, int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(1, n);
  LevelMatrix q(m, t);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index k = 0; k < t; ++k) q(i, k) = static_cast<std::uint8_t>(u(rng));
  return q;
}

}  // namespace

TEST_CASE("joint histogram counts and transposition") {
  Channel a(6), b(6);
  a << 1, 1, 2, 2, 3, 1;
  b << 2, 2, 1, 3, 3, 1;
  const auto h = JointHistogram::from_channels(a, b, 3);
  CHECK(h.total == 6);
  CHECK(h.counts.sum() == 6);
  CHECK(h.counts(0, 1) == 2);
  CHECK(h.counts(2, 2) == 1);
  const auto g = JointHistogram::from_channels(b, a, 3);
  CHECK(g.counts == h.transposed().counts);
  CHECK(JointHistogram::from_channels(a, b, 3, 2).total == 3);
}

TEST_CASE("conditional entropy examples") {
  SUBCASE("identical channels") {
    Channel a(5);
    a << 1, 2, 3, 2, 1;
    const auto h = JointHistogram::from_channels(a, a, 3);
    CHECK(conditional_entropy(h, Conditioning::kSecondGivenFirst) == 0.0);
    CHECK(conditional_entropy(h, Conditioning::kFirstGivenSecond) == 0.0);
  }
  SUBCASE("independent uniform binary channels") {
    Channel a(4), b(4);
    a << 1, 1, 2, 2;
    b << 1, 2, 1, 2;
    const auto h = JointHistogram::from_channels(a, b, 2);
    CHECK(conditional_entropy(h, Conditioning::kSecondGivenFirst) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(conditional_entropy(h, Conditioning::kFirstGivenSecond) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("counts [[2,1],[1,4]] against a hand-evaluated double sum") {
    JointHistogram h;
    h.counts.resize(2, 2);
    h.counts << 2, 1, 1, 4;
    h.total = 8;
    // Rows sum to 3 and 5; columns too.
    const double by_hand = -(2.0 / 8 * std::log2(2.0 / 3) + 1.0 / 8 * std::log2(1.0 / 3) +
                             1.0 / 8 * std::log2(1.0 / 5) + 4.0 / 8 * std::log2(4.0 / 5));
    CHECK(conditional_entropy(h, Conditioning::kSecondGivenFirst) == doctest::Approx(by_hand).epsilon(1e-14));
    CHECK(conditional_entropy(h, Conditioning::kFirstGivenSecond) == doctest::Approx(by_hand).epsilon(1e-14));
  }
  SUBCASE("empty histogram") {
    JointHistogram h;
    h.counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(2, 2);
    CHECK_THROWS_AS(conditional_entropy(h, Conditioning::kSecondGivenFirst), DomainError);
  }
}

TEST_CASE("conditional entropy matches the definition and stays in [0, log2 N]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 9;
    const auto q = random_levels(2, 300, n, rng);
    const auto h = JointHistogram::from_channels(q.row(0), q.row(1), n);
    const Eigen::MatrixXd counts = h.counts.cast<double>();
    const double fwd = conditional_entropy(h, Conditioning::kSecondGivenFirst);
    const double bwd = conditional_entropy(h, Conditioning::kFirstGivenSecond);
    CHECK(fwd == doctest::Approx(oracle::conditional_entropy_rows_given(counts)).epsilon(1e-12));
    CHECK(bwd == doctest::Approx(oracle::conditional_entropy_rows_given(counts.transpose())).epsilon(1e-12));
    CHECK(fwd >= 0.0);
    CHECK(fwd <= std::log2(n) + 1e-12);
  }
}

TEST_CASE("information metric examples") {
  LevelMatrix q(3, 4);
  q << 1, 1, 2, 2,  //
      1, 1, 2, 2,   //
      1, 2, 1, 2;
  const auto d = information_metric(log_from(q, 2));
  CHECK(d.values.diagonal().isZero(0));
  CHECK(d.values(0, 1) == 0.0);
  CHECK(d.values(0, 2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(d.values(2, 1) == d.values(1, 2));
  CHECK_THROWS_AS(information_metric(TactileLog{}), ValidationError);
  LevelMatrix bad = q;
  bad(0, 0) = 3;
  CHECK_THROWS_AS(information_metric(log_from(bad, 2)), ValidationError);
}

TEST_CASE("information metric is invariant to relabelling symbols within a channel") {
  std::mt19937_64 rng(17);
  const auto q = random_levels(6, 400, 5, rng);
  LevelMatrix relabeled = q;
  const std::uint8_t perm[6] = {0, 3, 5, 1, 2, 4};  // 1-based symbols, index 0 unused
  for (Eigen::Index t = 0; t < q.cols(); ++t) relabeled(2, t) = perm[q(2, t)];
  const auto a = information_metric(log_from(q, 5));
  const auto b = information_metric(log_from(relabeled, 5));
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("information metric satisfies the metric axioms on random logs") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    // Mix of independent and derived channels so some distances are small.
    LevelMatrix q = random_levels(20, 500, 4, rng);
    for (Eigen::Index i = 10; i < 20; ++i) {
      q.row(i) = q.row(i - 10);
      for (Eigen::Index t = 0; t < q.cols(); t += 7 + i) q(i, t) = static_cast<std::uint8_t>(1 + (q(i, t) % 4));
    }
    const auto d = information_metric(log_from(q, 4));
    CHECK(d.values == d.values.transpose());
    CHECK(d.values.diagonal().isZero(0));
    int violations = 0;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j)
        for (int k = 0; k < 20; ++k) violations += d.values(i, k) > d.values(i, j) + d.values(j, k) + 1e-9;
    CHECK(violations == 0);
  }
}

TEST_CASE("MDS of an equilateral triangle") {
  DistanceMatrix d{Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3)};
  const auto map = mds_embed(d, 2);
  const auto rec = oracle::euclidean_distances(map.points);
  CHECK((rec - d.values).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(map.dim == 2);
  CHECK(map.eigen_spectrum.size() == 3);
}

TEST_CASE("MDS recovers a random planar configuration up to rigid motion") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd x(30, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 5 * n(rng);
  const DistanceMatrix d{oracle::euclidean_distances(x)};
  const auto two = mds_embed(d, 2);
  CHECK(oracle::procrustes_error(x, two.points) < 1e-6);

  const auto five = mds_embed(d, 5);
  CHECK(five.points.rightCols(3).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((five.points.leftCols(2) - two.points).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("MDS sign convention and errors") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd x(10, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  const DistanceMatrix d{oracle::euclidean_distances(x)};
  const auto map = mds_embed(d, 3);
  for (int k = 0; k < 3; ++k) {
    for (Eigen::Index r = 0; r < 10; ++r) {
      if (std::abs(map.points(r, k)) > 1e-9) {
        CHECK(map.points(r, k) > 0);
        break;
      }
    }
  }
  CHECK_THROWS_AS(mds_embed(d, 0), ConfigError);
  CHECK_THROWS_AS(mds_embed(d, 10), ConfigError);
  DistanceMatrix skew = d;
  skew.values(0, 1) += 1.0;
  CHECK_THROWS_AS(mds_embed(skew, 2), ValidationError);
}

TEST_CASE("MDS clamps negative eigenvalues to zero coordinates") {
  // A unit simplex with one edge stretched past the triangle bound is not Euclidean.
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4);
  d(0, 1) = d(1, 0) = 3.0;
  const auto map = mds_embed(DistanceMatrix{d}, 3);
  CHECK(map.points.allFinite());
  CHECK(map.eigen_spectrum.minCoeff() < 0);
  for (int k = 0; k < 3; ++k) {
    if (map.eigen_spectrum[k] <= 0) CHECK(map.points.col(k).isZero(0));
  }
}

TEST_CASE("classical MDS is generic over the scalar type") {
  Eigen::MatrixXf d = (Eigen::MatrixXf::Ones(3, 3) - Eigen::MatrixXf::Identity(3, 3));
  const Eigen::MatrixXf p = classical_mds(d, 2);
  CHECK((p.row(0) - p.row(1)).norm() == doctest::Approx(1.0f).epsilon(1e-5));
}
