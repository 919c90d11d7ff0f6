#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Core>

#include "ebib/rng.hpp"

namespace ebib::mixture {

/// Running sufficient statistics of one cluster.
struct ClusterStats {
  double count = 0.0;
  double sum = 0.0;
  double sumsq = 0.0;
  void add(double y) {
    count += 1.0;
    sum += y;
    sumsq += y * y;
  }
  void remove(double y) {
    count -= 1.0;
    sum -= y;
    sumsq -= y * y;
  }
};

/// Components N(γ, variance) with γ ~ N(prior_mean, prior_variance).
struct NormalKnownVariance {
  double variance = 1.0;
  double prior_mean = 0.0;
  double prior_variance = 1.0;

  /// ln ∫ ∏_{i∈cluster} N(y_i; γ, variance) N(γ; m₀, s²) dγ.
  double log_marginal(const ClusterStats& s) const {
    if (s.count == 0.0) return 0.0;
    const double n = s.count, v = variance, s2 = prior_variance;
    const double ybar = s.sum / n;
    const double within = std::max(0.0, s.sumsq - n * ybar * ybar);
    const double d = ybar - prior_mean;
    return -0.5 * n * std::log(2.0 * std::numbers::pi * v) - 0.5 * std::log1p(n * s2 / v) - 0.5 * within / v -
           0.5 * n * d * d / (v + n * s2);
  }
  /// Posterior predictive ln p(y | cluster).
  double log_predictive(const ClusterStats& s, double y) const {
    const double prec = 1.0 / prior_variance + s.count / variance;
    const double mean = (prior_mean / prior_variance + s.sum / variance) / prec;
    const double var = variance + 1.0 / prec;
    const double r = y - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
  }
  /// Draw (location) from the cluster posterior; writes one parameter.
  void sample(const ClusterStats& s, Engine& rng, double& location) const {
    const double prec = 1.0 / prior_variance + s.count / variance;
    const double mean = (prior_mean / prior_variance + s.sum / variance) / prec;
    location = mean + random::standard_normal(rng) / std::sqrt(prec);
  }
};

/// Components N(μ, v) with μ | v ~ N(xi, v/tau), v ~ IG(omega/2, psi/2).
struct NormalInverseGammaBase {
  double xi = 0.0;
  double tau = 1.0;
  double omega = 2.0;
  double psi = 2.0;

  struct Posterior {
    double mean, kappa, shape, rate;
  };
  Posterior update(const ClusterStats& s) const {
    const double n = s.count;
    const double kappa = tau + n;
    const double ybar = n > 0 ? s.sum / n : 0.0;
    const double within = n > 0 ? std::max(0.0, s.sumsq - n * ybar * ybar) : 0.0;
    const double mean = (tau * xi + s.sum) / kappa;
    const double shape = 0.5 * omega + 0.5 * n;
    const double rate = 0.5 * psi + 0.5 * within + 0.5 * tau * n * (ybar - xi) * (ybar - xi) / kappa;
    return {mean, kappa, shape, rate};
  }
  double log_marginal(const ClusterStats& s) const {
    if (s.count == 0.0) return 0.0;
    const Posterior p = update(s);
    const double a0 = 0.5 * omega, b0 = 0.5 * psi;
    return -0.5 * s.count * std::log(2.0 * std::numbers::pi) + 0.5 * std::log(tau / p.kappa) + std::lgamma(p.shape) -
           std::lgamma(a0) + a0 * std::log(b0) - p.shape * std::log(p.rate);
  }
  /// Student-t predictive.
  double log_predictive(const ClusterStats& s, double y) const {
    const Posterior p = update(s);
    const double dof = 2.0 * p.shape;
    const double scale2 = p.rate * (p.kappa + 1.0) / (p.shape * p.kappa);
    const double r = y - p.mean;
    return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) - 0.5 * std::log(dof * std::numbers::pi * scale2) -
           0.5 * (dof + 1.0) * std::log1p(r * r / (dof * scale2));
  }
  void sample(const ClusterStats& s, Engine& rng, double& mean, double& variance) const {
    const Posterior p = update(s);
    variance = random::inverse_gamma(rng, p.shape, p.rate);
    mean = p.mean + std::sqrt(variance / p.kappa) * random::standard_normal(rng);
  }
};

/// ln p(z; α) of an allocation with cluster counts, under weights ~ Dir(α).
double log_allocation_prior(const Eigen::Ref<const Eigen::VectorXd>& counts,
                            const Eigen::Ref<const Eigen::VectorXd>& alpha);

struct EnumerationResult {
  double log_marginal = 0.0;
  Eigen::VectorXd posterior_mean_weights;  // E[p | y]
};

/// Exact marginal by summing over all K^n allocations (lexicographic odometer with incremental
/// cluster statistics). Throws CapacityError when K^n > 2^20.
template <class Base>
EnumerationResult enumerate_allocations(const Eigen::Ref<const Eigen::VectorXd>& y,
                                        const Eigen::Ref<const Eigen::VectorXd>& alpha, const Base& base);

extern template EnumerationResult enumerate_allocations<NormalKnownVariance>(
    const Eigen::Ref<const Eigen::VectorXd>&, const Eigen::Ref<const Eigen::VectorXd>&, const NormalKnownVariance&);
extern template EnumerationResult enumerate_allocations<NormalInverseGammaBase>(
    const Eigen::Ref<const Eigen::VectorXd>&, const Eigen::Ref<const Eigen::VectorXd>&,
    const NormalInverseGammaBase&);

}  // namespace ebib::mixture
