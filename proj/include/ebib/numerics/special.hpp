#pragma once

#include <Eigen/Core>

namespace ebib::numerics {

/// ln Γ(x) for x > 0. Throws DomainError otherwise.
double log_gamma(double x);

/// ln of the multivariate beta function B(α) = ∏Γ(α_j) / Γ(Σα_j).
double log_multivariate_beta(const Eigen::Ref<const Eigen::VectorXd>& alpha);

/// ln[a (a+1) ... (a+k-1)]; zero for k == 0.
double log_rising_factorial(double a, long k);

double normal_pdf(double x);
double normal_logpdf(double x, double mean, double variance);
double normal_cdf(double x);

/// ln Φ(x), accurate far into the lower tail.
double log_normal_cdf(double x);

double log_sum_exp(double a, double b);
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Inverse of the standard normal CDF (Acklam's rational approximation plus one Halley step).
double normal_quantile(double p);

}  // namespace ebib::numerics
