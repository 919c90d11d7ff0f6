#pragma once

#include <cstdint>
#include <utility>
#include <variant>

#include <Eigen/Core>

#include "ebib/rng.hpp"

namespace ebib {

/// Multivariate normal. Zero-variance coordinates are point masses (degenerate prior factors).
struct ClosedGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// α | σ² ~ N(alpha_mean, σ²/n), β | σ² ~ N(beta_mean, σ² beta_scale), σ² ~ IG(shape, rate),
/// with α and β conditionally independent. Coordinates (α, β, σ²).
struct NormalInverseGamma {
  double alpha_mean = 0.0;
  double n = 1.0;
  Eigen::VectorXd beta_mean;
  Eigen::MatrixXd beta_scale;
  double shape = 1.0;
  double rate = 1.0;
};

/// Independent coordinates with density ∝ exp(−rate |b|) N(b; center_j, scale_j²).
struct LaplaceGaussianProduct {
  double rate = 0.0;
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
};

/// 1-D tabulated density on an increasing grid.
struct GridDensity {
  Eigen::VectorXd x;
  Eigen::VectorXd density;
};

/// Weighted draws (rows). Uniform weights when the chain is unweighted.
struct WeightedSamples {
  Eigen::MatrixXd draws;
  Eigen::VectorXd weights;
  std::uint64_t seed = 0;
};

using PosteriorRep = std::variant<ClosedGaussian, NormalInverseGamma, LaplaceGaussianProduct, GridDensity, WeightedSamples>;

Eigen::Index dimension(const PosteriorRep& rep);

/// 1-D marginal of coordinate j. Gaussian and Laplace-Gaussian stay closed; samples keep their weights.
PosteriorRep marginal(const PosteriorRep& rep, Eigen::Index j);

/// Normalized log-density for closed kinds; grid densities are interpolated linearly.
double log_density(const PosteriorRep& rep, const Eigen::Ref<const Eigen::VectorXd>& x);
double density_1d(const PosteriorRep& rep, double x);

double mean_1d(const PosteriorRep& rep);
double sd_1d(const PosteriorRep& rep);
double cdf_1d(const PosteriorRep& rep, double x);
double quantile_1d(const PosteriorRep& rep, double p);

/// Effective sample size (Σw)²/Σw²; infinite for closed kinds.
double effective_sample_size(const PosteriorRep& rep);

/// Draws from a closed representation (rows).
Eigen::MatrixXd sample(const PosteriorRep& rep, Eigen::Index count, Engine& rng);

/// Normalizing constant of exp(−rate|b|) N(b; c, s²) over the real line, on the log scale.
double log_laplace_gaussian_normalizer(double rate, double center, double scale);

}  // namespace ebib
