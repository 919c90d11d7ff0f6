#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ebib/marginal.hpp"
#include "ebib/models/types.hpp"

namespace ebib {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Λ⁽ⁿ⁾: a box, optionally with an explicit point list that takes precedence for grid search.
struct RestrictedDomain {
  std::vector<Interval> box;
  std::vector<Eigen::VectorXd> grid;
  int points_per_axis = 101;  // box discretization for mmle_grid when no grid is given

  static RestrictedDomain interval(double lower, double upper);
  static RestrictedDomain uniform_box(Eigen::Index dim, double lower, double upper);
  static RestrictedDomain points(const std::vector<double>& values);
  void validate() const;
};

struct MmleResult {
  HyperParam lambda_hat;
  double objective = 0.0;  // log marginal at λ̂ (relative to λ_ref for reweighting; NaN for EM)
  bool converged = false;
  int iterations = 0;
  std::vector<bool> at_boundary;
  std::vector<double> trace;     // EM: λ per step
  std::vector<double> profile;   // grid search: objective per grid point (sorted grid order)
  std::vector<bool> unreliable;  // grid search with reweighting
};

/// Grid argmax. Ties go to the lexicographically smallest point.
/// With MarginalKind::Reweighting (M7) the whole grid is scored from one λ_ref chain;
/// unreliable points are excluded and an all-unreliable grid throws EstimationError.
MmleResult mmle_grid(const ModelFamily& family, const Dataset& data, const RestrictedDomain& domain,
                     const MarginalStrategy& strategy = {});

/// Continuous maximization of a deterministic log marginal.
/// 1-D: golden section to width tol, cross-checked against a 201-point grid of the box and snapped
/// to an edge when within tol of it. Multi-D: Nelder-Mead with 5 seeded restarts; M4 is optimized
/// row by row since its marginal factorizes over rows.
MmleResult mmle_continuous(const ModelFamily& family, const Dataset& data, const RestrictedDomain& domain,
                           double tol = 1e-8, std::uint64_t seed = 0, const MarginalStrategy& strategy = {});

struct LassoEmConfig {
  int iters = 2000;
  int burnin = 200;
  int thin = 1;
  std::uint64_t seed = 0;
  LassoSigma sigma_mode = LassoSigma::Jeffreys;
  double sigma2 = 1.0;  // used when sigma_mode is Fixed
};

/// EM within Gibbs for the LASSO rate: λ_{t+1} = √(2d / Σ_j E[τ_j² | y, λ_t]), with the chain
/// warm-started across steps and E[τ_j²] Rao-Blackwellized as |β_j|/(λσ) + 1/λ².
/// Converged after 3 consecutive relative changes below 1e-3.
MmleResult lasso_mmle_em(const Dataset& data, double init_lambda, const LassoEmConfig& cfg, int em_steps);

/// λ*(θ̂_n) with θ̂_n the maximum-likelihood estimate (M1, M2, M3, M5).
HyperParam pseudo_mmle(const ModelFamily& family, const Dataset& data);

/// max(0, Ȳ² − σ²/n).
double normal_mean_mmle_closed_form(const Dataset& data, double sigma2);

/// g-prior MMLE (1/n)·max{F − 1, 0}, F = (SSR/(d−2))/(SSE/(n−d+1)), d = p + 2, for any design
/// (the design is centered internally).
double gprior_mmle_closed_form(const Dataset& data);

}  // namespace ebib
