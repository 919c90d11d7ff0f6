#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ebib/mixture.hpp"
#include "ebib/models/types.hpp"
#include "ebib/rng.hpp"

namespace ebib {

struct GibbsConfig {
  int iters = 10000;  // total sweeps including burn-in
  int burnin = 1000;
  int thin = 1;
  std::uint64_t seed = 0;
  void validate() const;
};

struct ChainOutput {
  Eigen::MatrixXd draws;  // rows = retained sweeps
  std::vector<std::string> names;
  Eigen::VectorXd ess;  // per column
  std::uint64_t seed = 0;
};

/// Effective sample size of one chain by Geyer's initial positive sequence.
double chain_ess(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Batch-means standard error of the chain mean (20 batches).
double batch_means_stderr(const Eigen::Ref<const Eigen::VectorXd>& x, int batches = 20);

/// Synthetic data. Design-based families draw X from the family's design when given, and
/// otherwise use iid U(−10, 10) columns (M5) or standard normal centered columns (M2, M3).
/// M4 starts the path at state 0 and returns both the path and the transition counts.
Dataset simulate(const ModelFamily& family, const ParamPoint& theta0, Eigen::Index n, std::uint64_t seed);

/// Draw an n×d design with iid entries U(lo, hi).
Eigen::MatrixXd uniform_design(Eigen::Index n, Eigen::Index d, double lo, double hi, std::uint64_t seed);

/// Park-Casella Gibbs sampler for the Bayesian LASSO, with state kept between runs so that the
/// EM iteration can warm-start. Columns of the output: β_1..β_d, τ²_1..τ²_d, σ².
class LassoGibbs {
 public:
  LassoGibbs(const Dataset& data, LassoSigma mode, double sigma2_fixed, std::uint64_t seed);

  /// Gaussian prior with fixed τ² instead of the Laplace mixture (conjugate validation).
  void fix_tau2(const Eigen::VectorXd& tau2);

  ChainOutput run(double lambda, const GibbsConfig& cfg);

  /// Mean over the last run of E[τ_j² | β, σ², λ] = |β_j|/(λσ) + 1/λ², summed over j.
  double expected_tau2_sum() const { return last_tau2_sum_; }

 private:
  void sweep(double lambda, long iteration);

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd xtx_;
  Eigen::VectorXd xty_;
  LassoSigma mode_;
  double sigma2_;
  Eigen::VectorXd beta_, tau2_;
  std::optional<Eigen::VectorXd> fixed_tau2_;
  Engine rng_;
  std::uint64_t seed_;
  double last_tau2_sum_ = 0.0;
};

ChainOutput gibbs_lasso(const Dataset& data, double lambda, LassoSigma mode, double sigma2_fixed,
                        const GibbsConfig& cfg);

/// Collapsed allocation Gibbs sampler for a K-component mixture with weights ~ Dir(alpha).
/// Each sweep ends with a Metropolis transposition of two cluster labels.
/// Columns: p_1..p_K, then counts n_1..n_K, then cluster parameters (γ_k, or μ_k and v_k).
template <class Base>
ChainOutput gibbs_mixture(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::VectorXd& alpha, const Base& base,
                          const GibbsConfig& cfg);

/// Weight draws of the symmetric Dir(λ_ref) mixture sampler (first K columns are p, then counts).
ChainOutput gibbs_mixture_weights(const Dataset& data, double lambda_ref, int K,
                                  const mixture::NormalKnownVariance& base, const GibbsConfig& cfg);

extern template ChainOutput gibbs_mixture<mixture::NormalKnownVariance>(const Eigen::Ref<const Eigen::VectorXd>&,
                                                                        const Eigen::VectorXd&,
                                                                        const mixture::NormalKnownVariance&,
                                                                        const GibbsConfig&);
extern template ChainOutput gibbs_mixture<mixture::NormalInverseGammaBase>(
    const Eigen::Ref<const Eigen::VectorXd>&, const Eigen::VectorXd&, const mixture::NormalInverseGammaBase&,
    const GibbsConfig&);

}  // namespace ebib
