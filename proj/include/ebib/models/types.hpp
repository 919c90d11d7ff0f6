#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ebib {

enum class FamilyId {
  NormalMean,             // M1
  IndepNormalRegression,  // M2
  GPriorRegression,       // M3
  MarkovDirichlet,        // M4
  BayesLasso,             // M5
  GaussMixtureKnownK,     // M6
  OverfittedMixture,      // M7
};

std::string_view family_code(FamilyId id);

/// Which closed forms a family provides. Every flag set here has a test.
struct Capabilities {
  bool closed_marginal = false;
  bool closed_posterior = false;
  bool closed_oracle = false;
  bool closed_fisher = false;
};

/// M5 noise treatment: known σ², or π(σ²) ∝ 1/σ².
enum class LassoSigma { Fixed, Jeffreys };

struct FamilyConstants {
  double sigma2 = 1.0;  // noise variance for M1, M2 and fixed-σ M5
  int K = 2;            // mixture components (M6, M7) or chain states (M4)
  double omega = 2.0;   // M6 inverse-gamma shape hyperparameter (fixed)
  // M7 components N(γ, component_variance) with γ ~ N(location_prior_mean, location_prior_variance).
  double component_variance = 1.0;
  double location_prior_mean = 0.0;
  double location_prior_variance = 1.0;
  LassoSigma lasso_sigma = LassoSigma::Fixed;
  // lim XᵀX/n of the regression block; M3: V over the (centered) β design, M5: V.
  std::optional<Eigen::MatrixXd> gram;
  // Fixed design for data-free Gaussian computations (M2 KL).
  std::optional<Eigen::MatrixXd> design;
  // M4 search box for oracle and MMLE.
  double alpha_lower = 1e-3;
  double alpha_upper = 50.0;
};

/// Bundle of evaluators for one of the seven families; immutable after construction.
class ModelFamily {
 public:
  static ModelFamily normal_mean(double sigma2);
  static ModelFamily indep_normal_regression(double sigma2);
  static ModelFamily g_prior_regression();
  static ModelFamily markov_dirichlet(int states);
  static ModelFamily bayes_lasso(LassoSigma mode, double sigma2 = 1.0);
  static ModelFamily gauss_mixture(int K, double omega);
  static ModelFamily overfitted_mixture(int K, double component_variance, double location_prior_mean,
                                        double location_prior_variance);

  FamilyId id() const { return id_; }
  const FamilyConstants& constants() const { return constants_; }
  Capabilities capabilities() const;

  ModelFamily with_gram(Eigen::MatrixXd gram) const;
  ModelFamily with_design(Eigen::MatrixXd design) const;
  ModelFamily with_alpha_box(double lower, double upper) const;

 private:
  ModelFamily(FamilyId id, FamilyConstants c) : id_(id), constants_(std::move(c)) {}
  FamilyId id_;
  FamilyConstants constants_;
};

/// Named hyperparameter vector λ. Boundary values (0) and the M1 flat limit (+inf) are representable.
struct HyperParam {
  Eigen::VectorXd values;
  std::vector<std::string> names;

  static HyperParam scalar(std::string name, double v);
  static HyperParam named(std::vector<std::string> names, Eigen::VectorXd values);
  double operator[](Eigen::Index i) const { return values(i); }
  Eigen::Index size() const { return values.size(); }
};

/// Parameter θ in the family's canonical (free) coordinates:
///   M1 (θ) | M2 β | M3 (α, β, σ) | M4 p_ij row-major | M5 β, or (β, σ²) under LassoSigma::Jeffreys
///   M6 (w_1..w_{K-1}, μ_1..μ_K, v_1..v_K) | M7 (p_1..p_{K-1}, γ_1..γ_K)
/// Mixture weights store K-1 free coordinates; the last weight is 1 − Σ.
struct ParamPoint {
  Eigen::VectorXd values;

  static ParamPoint scalar(double theta);
  static ParamPoint vector(Eigen::VectorXd v);
  static ParamPoint gaussian_mixture(const Eigen::VectorXd& weights, const Eigen::VectorXd& means,
                                     const Eigen::VectorXd& variances);
  static ParamPoint location_mixture(const Eigen::VectorXd& weights, const Eigen::VectorXd& locations);
  static ParamPoint transition_matrix(const Eigen::MatrixXd& P);
  static ParamPoint g_prior(double alpha, const Eigen::VectorXd& beta, double sigma);
};

/// Full weight vector from K-1 free coordinates.
Eigen::VectorXd complete_simplex(const Eigen::Ref<const Eigen::VectorXd>& free_weights);

struct Dataset {
  Eigen::VectorXd y;                      // observations (rows)
  std::optional<Eigen::MatrixXd> X;       // design, columns x1..xd
  std::optional<Eigen::MatrixXi> counts;  // M4 transition counts
  std::vector<int> path;                  // M4 state path (X_0 ... X_n)
  Eigen::Index n = 0;

  static Dataset observations(Eigen::VectorXd y);
  static Dataset regression(Eigen::MatrixXd X, Eigen::VectorXd y);
  static Dataset transition_counts(Eigen::MatrixXi counts);
};

}  // namespace ebib
