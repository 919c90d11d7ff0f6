#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ebib/errors.hpp"

namespace ebib::numerics {

/// Log-density of N(mean, σ² I + λ 1 1ᵀ) at y, via the rank-one determinant lemma
/// and Sherman-Morrison. O(n).
template <typename DerivedY, typename DerivedM>
typename DerivedY::Scalar low_rank_gaussian_logpdf(const Eigen::MatrixBase<DerivedY>& y,
                                                   const Eigen::MatrixBase<DerivedM>& mean,
                                                   typename DerivedY::Scalar sigma2,
                                                   typename DerivedY::Scalar lambda) {
  using Scalar = typename DerivedY::Scalar;
  if (!(sigma2 > Scalar(0))) throw DomainError("low_rank_gaussian_logpdf: sigma2 must be positive");
  if (!(lambda >= Scalar(0))) throw DomainError("low_rank_gaussian_logpdf: lambda must be nonnegative");
  if (y.size() != mean.size()) throw DomainError("low_rank_gaussian_logpdf: dimension mismatch");
  const auto n = static_cast<Scalar>(y.size());
  const auto r = (y - mean).eval();
  const Scalar s = r.sum();
  const Scalar quad = (r.squaredNorm() - lambda * s * s / (sigma2 + n * lambda)) / sigma2;
  const Scalar logdet = n * std::log(sigma2) + std::log1p(n * lambda / sigma2);
  return -Scalar(0.5) * (n * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) + logdet + quad);
}

/// Log-density of N(mean, cov) by dense Cholesky. Throws DomainError if cov is not SPD.
template <typename Scalar>
Scalar dense_gaussian_logpdf(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& mean,
                             const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& cov) {
  Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(cov);
  if (llt.info() != Eigen::Success) throw DomainError("dense_gaussian_logpdf: covariance not SPD");
  const auto z = llt.matrixL().solve(y - mean).eval();
  const Scalar logdet = Scalar(2) * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const auto n = static_cast<Scalar>(y.size());
  return -Scalar(0.5) * (n * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) + logdet + z.squaredNorm());
}

/// True when the matrix admits a Cholesky factorization.
template <typename Derived>
bool is_spd(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() != m.cols()) return false;
  Eigen::LLT<typename Derived::PlainObject> llt(m);
  return llt.info() == Eigen::Success;
}

/// KL( N(mu1, cov1) || N(mu2, cov2) ), dense.
double gaussian_kl(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1, const Eigen::VectorXd& mu2,
                   const Eigen::MatrixXd& cov2);

/// Exact L1 distance ∫|N(x; m1, v1) − N(x; m2, v2)| dx from the density crossing points.
double gaussian_l1_1d(double m1, double v1, double m2, double v2);

}  // namespace ebib::numerics
