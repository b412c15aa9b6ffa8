#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "bodyschema/errors.hpp"

namespace bodyschema {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Cholesky factor of an SPD matrix. When the first attempt fails, retries
// once with 1e-8 * trace / d added to the diagonal, then throws NumericError.
template <typename Scalar>
Eigen::LLT<MatrixX<Scalar>> robust_cholesky(const MatrixX<Scalar>& m, const char* what) {
  Eigen::LLT<MatrixX<Scalar>> llt(m);
  if (llt.info() == Eigen::Success && m.allFinite()) return llt;
  const Scalar jitter = Scalar(1e-8) * std::abs(m.trace()) / Scalar(m.rows());
  MatrixX<Scalar> bumped = m;
  bumped.diagonal().array() += jitter;
  llt.compute(bumped);
  if (llt.info() != Eigen::Success || !bumped.allFinite()) {
    throw NumericError(std::string(what) + " is not symmetric positive definite");
  }
  return llt;
}

// Multivariate normal with cached precision and log-determinant.
template <typename Scalar>
struct Gaussian {
  VectorX<Scalar> mean;
  MatrixX<Scalar> covariance;
  MatrixX<Scalar> precision;
  Scalar log_det_covariance = 0;

  static Gaussian from_precision(VectorX<Scalar> mu, const MatrixX<Scalar>& lambda) {
    const auto llt = robust_cholesky<Scalar>(lambda, "precision matrix");
    Gaussian g;
    g.mean = std::move(mu);
    g.precision = lambda;
    g.covariance = llt.solve(MatrixX<Scalar>::Identity(lambda.rows(), lambda.cols()));
    g.covariance = (Scalar(0.5) * (g.covariance + g.covariance.transpose())).eval();
    g.log_det_covariance = -Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
    return g;
  }

  static Gaussian from_covariance(VectorX<Scalar> mu, const MatrixX<Scalar>& sigma) {
    const auto llt = robust_cholesky<Scalar>(sigma, "covariance matrix");
    Gaussian g;
    g.mean = std::move(mu);
    g.covariance = sigma;
    g.precision = llt.solve(MatrixX<Scalar>::Identity(sigma.rows(), sigma.cols()));
    g.precision = (Scalar(0.5) * (g.precision + g.precision.transpose())).eval();
    g.log_det_covariance = Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
    return g;
  }

  Eigen::Index dim() const { return mean.size(); }

  template <typename Derived>
  Scalar log_density(const Eigen::MatrixBase<Derived>& x) const {
    const VectorX<Scalar> diff = x - mean;
    const Scalar quad = diff.dot(precision * diff);
    return Scalar(-0.5) * (Scalar(dim()) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) +
                           log_det_covariance + quad);
  }
};

template <typename Scalar, typename Rng>
VectorX<Scalar> standard_normal_vector(Eigen::Index d, Rng& rng) {
  std::normal_distribution<Scalar> normal(0, 1);
  VectorX<Scalar> z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(rng);
  return z;
}

// Draw from N(mean, precision^-1) without forming the covariance.
template <typename Scalar, typename Rng>
VectorX<Scalar> sample_normal_precision(const VectorX<Scalar>& mean, const MatrixX<Scalar>& precision, Rng& rng) {
  const auto llt = robust_cholesky<Scalar>(precision, "precision matrix");
  const VectorX<Scalar> z = standard_normal_vector<Scalar>(mean.size(), rng);
  // precision = L L^T  =>  L^-T z has covariance precision^-1.
  return mean + llt.matrixU().solve(z);
}

// Wishart draw with scale `scale` and `dof` degrees of freedom via the
// Bartlett decomposition; E[W] = dof * scale. Requires dof > d - 1.
template <typename Scalar, typename Rng>
MatrixX<Scalar> sample_wishart(const MatrixX<Scalar>& scale, Scalar dof, Rng& rng) {
  const Eigen::Index d = scale.rows();
  if (!(dof > Scalar(d - 1))) throw DomainError("Wishart degrees of freedom must exceed d - 1");
  const auto llt = robust_cholesky<Scalar>(scale, "Wishart scale matrix");
  std::normal_distribution<Scalar> normal(0, 1);
  MatrixX<Scalar> a = MatrixX<Scalar>::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    std::chi_squared_distribution<Scalar> chi2(dof - Scalar(i));
    a(i, i) = std::sqrt(chi2(rng));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = normal(rng);
  }
  const MatrixX<Scalar> la = llt.matrixL() * a;
  MatrixX<Scalar> w = la * la.transpose();
  return Scalar(0.5) * (w + w.transpose());
}

// log Gamma(shape, 1) draw, stable for very small shapes:
// Gamma(a) = Gamma(a + 1) * U^(1/a).
template <typename Scalar, typename Rng>
Scalar sample_log_gamma(Scalar shape, Rng& rng) {
  if (!(shape > 0)) throw DomainError("gamma shape must be positive");
  if (shape >= Scalar(1)) {
    std::gamma_distribution<Scalar> g(shape, 1);
    return std::log(g(rng));
  }
  std::gamma_distribution<Scalar> g(shape + Scalar(1), 1);
  std::uniform_real_distribution<Scalar> u(0, 1);
  Scalar uu = u(rng);
  while (uu <= Scalar(0)) uu = u(rng);
  return std::log(g(rng)) + std::log(uu) / shape;
}

// Dirichlet draw normalized in log space, so tiny concentrations never yield
// an all-zero vector.
template <typename Scalar, typename Rng>
VectorX<Scalar> sample_dirichlet(const VectorX<Scalar>& alpha, Rng& rng) {
  VectorX<Scalar> logs(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) logs[k] = sample_log_gamma(alpha[k], rng);
  const Scalar top = logs.maxCoeff();
  VectorX<Scalar> w = (logs.array() - top).exp().matrix();
  return w / w.sum();
}

// N(q | a) N(q | b) as a function of q is proportional to a Gaussian with
// precision Pa + Pb and mean (Pa + Pb)^-1 (Pa ma + Pb mb).
template <typename Scalar>
Gaussian<Scalar> gaussian_product(const Gaussian<Scalar>& a, const Gaussian<Scalar>& b) {
  const MatrixX<Scalar> precision = a.precision + b.precision;
  const auto llt = robust_cholesky<Scalar>(precision, "joint-point precision");
  VectorX<Scalar> mean = llt.solve(a.precision * a.mean + b.precision * b.mean);
  return Gaussian<Scalar>::from_precision(std::move(mean), precision);
}

}  // namespace bodyschema
