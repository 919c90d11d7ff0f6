#pragma once

#include <Eigen/Core>

#include "ebib/models/types.hpp"
#include "ebib/posterior.hpp"

namespace ebib {

/// ℓ_n(θ) = ln p_θ(y). M4 drops the multinomial constant.
double log_likelihood(const ModelFamily& family, const ParamPoint& theta, const Dataset& data);

/// ψ(θ, λ) = ln π_λ(θ). λ must lie in the interior of the domain.
///
/// M3 drops the constant of the improper π(α, σ²) ∝ σ⁻² (as a density in σ: 2/σ),
/// and M5 under LassoSigma::Jeffreys includes ln(1/σ²).
double log_prior(const ModelFamily& family, const ParamPoint& theta, const HyperParam& lambda);

/// ∇_θ ψ(θ, λ) in the canonical coordinates of ParamPoint.
/// M5 with any β_j = 0 throws NonDifferentiableError.
Eigen::VectorXd prior_gradient(const ModelFamily& family, const ParamPoint& theta, const HyperParam& lambda);

/// λ*(θ₀) = argmax_λ π_λ(θ₀). May lie on the boundary (M2 null coefficients, M7, M4 structural zeros).
///
/// M3 uses the family gram V = XᵀX/n, so λ*_n = β₀ᵀVβ₀ / (σ₀²(d−2)).
/// M4 maximizes the reduced Dirichlet log-density per row over the family's alpha box with
/// Nelder-Mead from 5 seeded restarts; structural-zero cells are returned as exact zeros.
HyperParam oracle_hyperparameter(const ModelFamily& family, const ParamPoint& theta0);

/// Fisher information I(θ₀) per observation, in canonical coordinates.
/// Supported: M1, M3 (coordinates (α, β, σ)), M5 with fixed σ, M6 (by quadrature).
Eigen::MatrixXd fisher_information(const ModelFamily& family, const ParamPoint& theta0);

struct PosteriorOptions {
  Eigen::Index draws = 20000;
  std::uint64_t seed = 0;
};

/// π_λ(θ | y). Closed forms where available, otherwise samples.
///   M1 → ClosedGaussian (λ = +inf gives the flat-prior limit), M2 → ClosedGaussian over β,
///   M3 → NormalInverseGamma, M4 → samples from the row Dirichlets,
///   M5 fixed σ with orthogonal design → LaplaceGaussianProduct, M5 otherwise → Gibbs samples,
///   M6/M7 → samples from the collapsed allocation sampler.
PosteriorRep posterior(const ModelFamily& family, const HyperParam& lambda, const Dataset& data,
                       const PosteriorOptions& options = {});

/// Canonical hyperparameter names of a family (M2 and M4 depend on the dimension).
HyperParam make_hyper(const ModelFamily& family, const Eigen::VectorXd& values);

/// Log-density of Dir(p; α) restricted to the coordinates where mask is true.
/// Coordinates outside the mask carry α = 0 and must have p = 0.
double reduced_dirichlet_logpdf(const Eigen::Ref<const Eigen::VectorXd>& p,
                                const Eigen::Ref<const Eigen::VectorXd>& alpha);

/// True when design columns are mutually orthogonal (relative tolerance 1e-9).
bool has_orthogonal_columns(const Eigen::MatrixXd& X);

}  // namespace ebib
