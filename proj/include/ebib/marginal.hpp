#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ebib/mixture.hpp"
#include "ebib/models/types.hpp"
#include "ebib/numerics/quadrature.hpp"

namespace ebib {

enum class MarginalKind { ClosedForm, Quadrature, Enumeration, Reweighting };

/// Estimator for the reweighting ratio m_λ/m_λref from the λ_ref chain.
///   RaoBlackwell: mean of p(z; λ)/p(z; λ_ref) over allocation draws (the conditional
///                 expectation of the Dirichlet density ratio given z).
///   WeightRatio:  mean of Dir(p; λ)/Dir(p; λ_ref) over weight draws.
enum class ReweightEstimator { RaoBlackwell, WeightRatio };

struct MarginalStrategy {
  MarginalKind kind = MarginalKind::ClosedForm;
  std::optional<HyperParam> reference;  // λ_ref for reweighting
  int draws = 20000;
  int burnin = 1000;
  std::uint64_t seed = 0;
  ReweightEstimator estimator = ReweightEstimator::RaoBlackwell;
  numerics::QuadratureSpec quadrature{};
};

struct MarginalEstimate {
  double value = 0.0;  // ln m_λ, or ln m_λ − ln m_λref for reweighting
  double std_error = 0.0;
  double ess = std::numeric_limits<double>::infinity();
  bool relative = false;
};

/// ln m_λ(y) by the requested strategy.
///   ClosedForm: M1, M2, M3, M4 (the rising-factorial display), M5 with fixed σ and orthogonal design.
///   Quadrature: M1 (1-D), M5 fixed σ orthogonal (per-coordinate 1-D integrals).
///   Enumeration: M6, M7 with K^n ≤ 2^20.
///   Reweighting: M7 relative to strategy.reference; throws ReliabilityError when ESS < 50.
MarginalEstimate log_marginal(const ModelFamily& family, const HyperParam& lambda, const Dataset& data,
                              const MarginalStrategy& strategy = {});

/// Shorthand for the deterministic value.
double log_marginal_value(const ModelFamily& family, const HyperParam& lambda, const Dataset& data,
                          const MarginalStrategy& strategy = {});

/// Exact ln m_λ for the overfitted mixture with weights ~ Dir(λ, ..., λ).
double mixture_marginal_exact(const Dataset& data, double lambda, int K, const mixture::NormalKnownVariance& base);

/// Dirichlet-multinomial form ∏_i B(α_i + y_i)/B(α_i) over positive-α cells (independent of the display).
double markov_dirichlet_multinomial(const Eigen::MatrixXi& counts, const Eigen::MatrixXd& alpha);

struct ProfilePoint {
  double lambda = 0.0;
  double log_ratio = 0.0;  // ln m_λ − ln m_λref
  double std_error = 0.0;
  double ess = 0.0;
  bool reliable = true;
};

/// Relative log-marginal profile over a λ grid from one Gibbs run at λ_ref.
/// Grid points must lie within a factor 20 of λ_ref. Points with ESS < 50 are flagged unreliable.
std::vector<ProfilePoint> mixture_marginal_profile(const Dataset& data, const std::vector<double>& grid,
                                                   double lambda_ref, int K,
                                                   const mixture::NormalKnownVariance& base, int draws,
                                                   std::uint64_t seed, int burnin = 1000,
                                                   ReweightEstimator estimator = ReweightEstimator::RaoBlackwell);

}  // namespace ebib
