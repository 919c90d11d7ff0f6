#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ebib/models/types.hpp"
#include "ebib/numerics/quadrature.hpp"
#include "ebib/posterior.hpp"

namespace ebib {

/// Δ_θ₀(λ₁, λ₂) = ∇ψ(θ₀, λ₁) − ∇ψ(θ₀, λ₂).
Eigen::VectorXd delta_theta0(const ModelFamily& family, const ParamPoint& theta0, const HyperParam& lambda1,
                             const HyperParam& lambda2);

/// √(2/π) √(ΔᵀI₀⁻¹Δ / n).
double predicted_l1_posterior(const ModelFamily& family, const ParamPoint& theta0, const HyperParam& lambda1,
                              const HyperParam& lambda2, Eigen::Index n);

/// Same quantity from explicit Δ and I₀.
double predicted_l1_from(const Eigen::VectorXd& delta, const Eigen::MatrixXd& fisher, Eigen::Index n);

/// Closed form of ΔᵀI₀⁻¹Δ for the g-prior in coordinates (α, β, σ):
///   c² (βᵀVβ/σ²) [1 + βᵀVβ/(2σ²)],  c = 1/g₁ − 1/g₂.
double gprior_delta_quadratic(const Eigen::VectorXd& beta0, const Eigen::MatrixXd& V, double sigma0, double g1,
                              double g2);

struct L1Options {
  numerics::QuadratureSpec quadrature{};
  int mc_draws = 200000;  // d ≥ 3 importance sampling
  std::uint64_t seed = 0;
  double window_sd = 10.0;  // truncation of infinite ranges around each mean
};

/// ‖p − q‖₁ ∈ [0, 2].
///   1-D closed Gaussians: exact crossing-point formula.
///   1-D densities: adaptive quadrature on mean ± window_sd·sd of both.
///   1-D samples vs density: histogram of the samples (bins ≈ √ESS/5) against the bin
///   probabilities of the density, plus the two tail masses;
///   throws ReliabilityError when the sample ESS < 100.
///   2-D densities: nested quadrature. d ≥ 3: importance sampling from ½p + ½q.
double l1_distance(const PosteriorRep& p, const PosteriorRep& q, const L1Options& options = {});

struct PredictiveOptions {
  int design_draws = 400;  // M3: Monte Carlo over x ~ N(0, V)
  std::uint64_t seed = 0;
  numerics::QuadratureSpec quadrature{};
};

/// n⁻¹ ∫ |Δᵀ I₀⁻¹ ∇_θ p_θ₀(y)| dy for M1, M3 (random Gaussian design with the family gram) and M6.
double predicted_l1_predictive(const ModelFamily& family, const ParamPoint& theta0, const HyperParam& lambda1,
                               const HyperParam& lambda2, Eigen::Index n, const PredictiveOptions& options = {});

/// Posterior predictive of the next observation. M1 only: N(posterior mean, posterior var + σ²).
PosteriorRep predictive(const ModelFamily& family, const HyperParam& lambda, const Dataset& data);

/// Π_{λ_eval}(C | y) − (1 − α) for the equal-tailed 1−α region C of coordinate j under λ_build.
double credible_discrepancy(const ModelFamily& family, const Dataset& data, const HyperParam& lambda_build,
                            const HyperParam& lambda_eval, double alpha, Eigen::Index coordinate = 0);

struct MergingReport {
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
  HyperParam lambda1, lambda2;
  double l1_exact = 0.0;
  double l1_predicted = 0.0;
  Eigen::VectorXd delta;
  Eigen::MatrixXd fisher;
  std::optional<double> credible_discrepancy;
};

/// CSV with columns n, seed, lambda1, lambda2, l1_exact, l1_pred, cred_disc (first hyperparameter coordinate).
std::string merging_csv(const std::vector<MergingReport>& rows);

}  // namespace ebib
