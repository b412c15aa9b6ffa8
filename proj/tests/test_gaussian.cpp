#include <doctest.h>

#include <cmath>
#include <random>

#include "bodyschema/gaussian.hpp"
#include "oracles.hpp"

using namespace bodyschema;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Moments {
  VectorXd mean;
  MatrixXd cov;
};

template <typename Draw>
Moments sample_moments(int n, Eigen::Index d, Draw draw) {
  MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) x.row(i) = draw().transpose();
  Moments m;
  m.mean = x.colwise().mean().transpose();
  const MatrixXd c = x.rowwise() - m.mean.transpose();
  m.cov = c.transpose() * c / (n - 1);
  return m;
}

// Sample mean and covariance agree with N(mean, cov) within 3 standard errors.
void check_moments(const Moments& got, const VectorXd& mean, const MatrixXd& cov, int n) {
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    CHECK(std::abs(got.mean[i] - mean[i]) <= 3.0 * std::sqrt(cov(i, i) / n));
    for (Eigen::Index j = 0; j < mean.size(); ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
      CHECK(std::abs(got.cov(i, j) - cov(i, j)) <= 3.0 * se);
    }
  }
}

}  // namespace

TEST_CASE("Gaussian caches agree between precision and covariance forms") {
  std::mt19937_64 rng(1);
  const MatrixXd s = oracle::random_spd(4, rng);
  const VectorXd mu = VectorXd::LinSpaced(4, -1, 2);
  const auto a = Gaussian<double>::from_covariance(mu, s);
  const auto b = Gaussian<double>::from_precision(mu, s.inverse());
  CHECK((a.precision - b.precision).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(a.log_det_covariance == doctest::Approx(std::log(s.determinant())).epsilon(1e-10));
  const VectorXd x = VectorXd::Ones(4);
  const double direct = -0.5 * (4 * std::log(2 * std::numbers::pi) + std::log(s.determinant()) +
                                (x - mu).dot(s.inverse() * (x - mu)));
  CHECK(a.log_density(x) == doctest::Approx(direct).epsilon(1e-10));
  CHECK(b.log_density(x) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("robust Cholesky jitters once, then gives up") {
  MatrixXd psd(2, 2);
  psd << 1, 1, 1, 1;  // singular but PSD
  CHECK_NOTHROW(robust_cholesky<double>(psd, "psd"));
  MatrixXd indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(robust_cholesky<double>(indefinite, "indefinite"), NumericError);
}

TEST_CASE("product of two Gaussians: closed-form examples") {
  SUBCASE("1D N(0,1) N(2,1) is N(1, 1/2)") {
    const auto a = Gaussian<double>::from_covariance(VectorXd::Constant(1, 0.0), MatrixXd::Identity(1, 1));
    const auto b = Gaussian<double>::from_covariance(VectorXd::Constant(1, 2.0), MatrixXd::Identity(1, 1));
    const auto p = gaussian_product(a, b);
    CHECK(p.mean[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("equal components halve the covariance") {
    std::mt19937_64 rng(2);
    const MatrixXd s = oracle::random_spd(3, rng);
    const VectorXd mu(VectorXd::LinSpaced(3, 1, 3));
    const auto g = Gaussian<double>::from_covariance(mu, s);
    const auto p = gaussian_product(g, g);
    CHECK((p.mean - mu).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((p.covariance - 0.5 * s).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("joint-point draws match the product Gaussian moments") {
  std::mt19937_64 rng(3);
  for (int d : {1, 2, 5}) {
    const auto a = Gaussian<double>::from_covariance(VectorXd::Random(d), oracle::random_spd(d, rng));
    const auto b = Gaussian<double>::from_covariance(VectorXd::Random(d) * 3, oracle::random_spd(d, rng));
    // Oracle: precision-weighted combination computed with plain inverses.
    const MatrixXd lam = a.covariance.inverse() + b.covariance.inverse();
    const MatrixXd cov = lam.inverse();
    const VectorXd mean = cov * (a.covariance.inverse() * a.mean + b.covariance.inverse() * b.mean);
    const auto p = gaussian_product(a, b);
    const int n = 20000;
    const auto m = sample_moments(n, d, [&] { return sample_normal_precision<double>(p.mean, p.precision, rng); });
    check_moments(m, mean, cov, n);
  }
}

TEST_CASE("Wishart draws have mean dof * scale") {
  std::mt19937_64 rng(4);
  const MatrixXd scale = oracle::random_spd(3, rng, 0.5) / 3.0;
  const double dof = 6.5;
  const int n = 20000;
  MatrixXd sum = MatrixXd::Zero(3, 3), sq = MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const MatrixXd w = sample_wishart<double>(scale, dof, rng);
    sum += w;
    sq += w.cwiseAbs2();
  }
  const MatrixXd mean = sum / n;
  const MatrixXd var = sq / n - mean.cwiseAbs2();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(mean(i, j) - dof * scale(i, j)) <= 3.0 * std::sqrt(var(i, j) / n));
  CHECK_THROWS_AS(sample_wishart<double>(scale, 1.5, rng), DomainError);
}

TEST_CASE("Dirichlet draws have the normalized-concentration mean") {
  std::mt19937_64 rng(5);
  VectorXd alpha(4);
  alpha << 0.05, 1.0, 3.5, 20.0;
  const int n = 40000;
  const auto m = sample_moments(n, 4, [&] { return sample_dirichlet<double>(alpha, rng); });
  const double a0 = alpha.sum();
  for (int k = 0; k < 4; ++k) {
    const double mean = alpha[k] / a0;
    const double var = mean * (1 - mean) / (a0 + 1);
    CHECK(std::abs(m.mean[k] - mean) <= 3.0 * std::sqrt(var / n));
  }
}

TEST_CASE("tiny Dirichlet concentrations never produce NaN or an empty simplex") {
  std::mt19937_64 rng(6);
  const VectorXd alpha = VectorXd::Constant(10, 1e-3);
  for (int i = 0; i < 1000; ++i) {
    const VectorXd w = sample_dirichlet<double>(alpha, rng);
    REQUIRE(w.allFinite());
    CHECK(std::abs(w.sum() - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(sample_log_gamma<double>(0.0, rng), DomainError);
}
