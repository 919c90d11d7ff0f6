#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ebib/models/types.hpp"

namespace ebib {

struct KlEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool std_error_defined = true;  // false when reps == 1
};

/// KL(p_θ₀ⁿ ‖ m_λⁿ) in closed form.
///   M1: N(θ₀1, σ²I) against N(0, σ²I + λ11ᵀ).
///   M2: N(Xβ₀, σ²I) against N(0, σ²I + X D_τ² Xᵀ); X is the family design (n rows).
double kl_exact_gaussian(const ModelFamily& family, const ParamPoint& theta0, const HyperParam& lambda, Eigen::Index n);

/// Mean of ℓ_n(θ₀; Y⁽ʳ⁾) − ln m_λ(Y⁽ʳ⁾) over reps simulated datasets (closed-form marginal).
/// Dataset r uses derive_seed(seed, {r}), so profiles share datasets across λ.
KlEstimate kl_monte_carlo(const ModelFamily& family, const ParamPoint& theta0, const HyperParam& lambda,
                          Eigen::Index n, int reps, std::uint64_t seed);

struct KlStrategy {
  bool exact = true;
  int reps = 200;
  std::uint64_t seed = 0;
};

struct KlProfile {
  std::vector<double> grid;  // scalar λ
  std::vector<double> values;
  std::vector<double> std_errors;
  HyperParam minimizer;
  double min_value = 0.0;
  bool ambiguous = false;
  std::vector<double> candidates;  // grid points whose 2-SE band overlaps the minimum's
};

/// Grid profile of KL(λ) and its minimizer (scalar hyperparameters).
KlProfile kl_minimizer(const ModelFamily& family, const ParamPoint& theta0, Eigen::Index n,
                       const std::vector<double>& grid, const KlStrategy& strategy = {});

/// Relative KL profile for the overfitted mixture: −E[ln m_λ(Y) − ln m_λref(Y)] over reps shared
/// datasets, each scored by the reweighting profile. Minimizers coincide with those of the KL.
KlProfile kl_relative_mixture(const ModelFamily& family, const ParamPoint& theta0, Eigen::Index n,
                              const std::vector<double>& grid, double lambda_ref, int reps, int draws,
                              std::uint64_t seed);

/// CSV with columns lambda, kl, stderr.
std::string kl_profile_csv(const KlProfile& profile);

}  // namespace ebib
