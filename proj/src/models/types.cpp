#include "ebib/models/types.hpp"

#include <cmath>

#include "ebib/errors.hpp"

namespace ebib {

std::string_view family_code(FamilyId id) {
  switch (id) {
    case FamilyId::NormalMean: return "M1";
    case FamilyId::IndepNormalRegression: return "M2";
    case FamilyId::GPriorRegression: return "M3";
    case FamilyId::MarkovDirichlet: return "M4";
    case FamilyId::BayesLasso: return "M5";
    case FamilyId::GaussMixtureKnownK: return "M6";
    case FamilyId::OverfittedMixture: return "M7";
  }
  return "?";
}

Capabilities ModelFamily::capabilities() const {
  switch (id_) {
    case FamilyId::NormalMean: return {true, true, true, true};
    case FamilyId::IndepNormalRegression: return {true, true, true, false};
    case FamilyId::GPriorRegression: return {true, true, true, true};
    case FamilyId::MarkovDirichlet: return {true, false, false, false};
    case FamilyId::BayesLasso: {
      const bool fixed = constants_.lasso_sigma == LassoSigma::Fixed;
      return {fixed, fixed, true, fixed};
    }
    case FamilyId::GaussMixtureKnownK: return {false, false, true, false};
    case FamilyId::OverfittedMixture: return {false, false, true, false};
  }
  return {};
}

namespace {
void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}
}  // namespace

ModelFamily ModelFamily::normal_mean(double sigma2) {
  require_positive(sigma2, "normal_mean: sigma2");
  FamilyConstants c;
  c.sigma2 = sigma2;
  return {FamilyId::NormalMean, c};
}

ModelFamily ModelFamily::indep_normal_regression(double sigma2) {
  require_positive(sigma2, "indep_normal_regression: sigma2");
  FamilyConstants c;
  c.sigma2 = sigma2;
  return {FamilyId::IndepNormalRegression, c};
}

ModelFamily ModelFamily::g_prior_regression() { return {FamilyId::GPriorRegression, {}}; }

ModelFamily ModelFamily::markov_dirichlet(int states) {
  if (states < 2) throw DomainError("markov_dirichlet: need at least 2 states");
  FamilyConstants c;
  c.K = states;
  return {FamilyId::MarkovDirichlet, c};
}

ModelFamily ModelFamily::bayes_lasso(LassoSigma mode, double sigma2) {
  require_positive(sigma2, "bayes_lasso: sigma2");
  FamilyConstants c;
  c.lasso_sigma = mode;
  c.sigma2 = sigma2;
  return {FamilyId::BayesLasso, c};
}

ModelFamily ModelFamily::gauss_mixture(int K, double omega) {
  if (K < 2) throw DomainError("gauss_mixture: need K >= 2");
  require_positive(omega, "gauss_mixture: omega");
  FamilyConstants c;
  c.K = K;
  c.omega = omega;
  return {FamilyId::GaussMixtureKnownK, c};
}

ModelFamily ModelFamily::overfitted_mixture(int K, double component_variance, double location_prior_mean,
                                            double location_prior_variance) {
  if (K < 2) throw DomainError("overfitted_mixture: need K >= 2");
  require_positive(component_variance, "overfitted_mixture: component variance");
  require_positive(location_prior_variance, "overfitted_mixture: location prior variance");
  FamilyConstants c;
  c.K = K;
  c.component_variance = component_variance;
  c.location_prior_mean = location_prior_mean;
  c.location_prior_variance = location_prior_variance;
  return {FamilyId::OverfittedMixture, c};
}

ModelFamily ModelFamily::with_gram(Eigen::MatrixXd gram) const {
  if (gram.rows() != gram.cols()) throw DomainError("with_gram: gram must be square");
  ModelFamily out = *this;
  out.constants_.gram = std::move(gram);
  return out;
}

ModelFamily ModelFamily::with_design(Eigen::MatrixXd design) const {
  ModelFamily out = *this;
  out.constants_.design = std::move(design);
  return out;
}

ModelFamily ModelFamily::with_alpha_box(double lower, double upper) const {
  if (!(lower > 0.0 && upper > lower)) throw DomainError("with_alpha_box: need 0 < lower < upper");
  ModelFamily out = *this;
  out.constants_.alpha_lower = lower;
  out.constants_.alpha_upper = upper;
  return out;
}

HyperParam HyperParam::scalar(std::string name, double v) {
  return {Eigen::VectorXd::Constant(1, v), {std::move(name)}};
}

HyperParam HyperParam::named(std::vector<std::string> names, Eigen::VectorXd values) {
  if (static_cast<Eigen::Index>(names.size()) != values.size())
    throw DomainError("HyperParam: names and values differ in length");
  return {std::move(values), std::move(names)};
}

ParamPoint ParamPoint::scalar(double theta) { return {Eigen::VectorXd::Constant(1, theta)}; }

ParamPoint ParamPoint::vector(Eigen::VectorXd v) { return {std::move(v)}; }

namespace {
void check_simplex(const Eigen::VectorXd& w) {
  if ((w.array() < 0.0).any() || std::abs(w.sum() - 1.0) > 1e-12)
    throw DomainError("weights must lie on the simplex");
}
}  // namespace

ParamPoint ParamPoint::gaussian_mixture(const Eigen::VectorXd& weights, const Eigen::VectorXd& means,
                                        const Eigen::VectorXd& variances) {
  const Eigen::Index K = weights.size();
  if (means.size() != K || variances.size() != K) throw DomainError("gaussian_mixture: size mismatch");
  check_simplex(weights);
  if ((variances.array() <= 0.0).any()) throw DomainError("gaussian_mixture: variances must be positive");
  Eigen::VectorXd v(3 * K - 1);
  v << weights.head(K - 1), means, variances;
  return {v};
}

ParamPoint ParamPoint::location_mixture(const Eigen::VectorXd& weights, const Eigen::VectorXd& locations) {
  const Eigen::Index K = weights.size();
  if (locations.size() != K) throw DomainError("location_mixture: size mismatch");
  check_simplex(weights);
  Eigen::VectorXd v(2 * K - 1);
  v << weights.head(K - 1), locations;
  return {v};
}

ParamPoint ParamPoint::transition_matrix(const Eigen::MatrixXd& P) {
  if (P.rows() != P.cols()) throw DomainError("transition_matrix: must be square");
  for (Eigen::Index i = 0; i < P.rows(); ++i) check_simplex(P.row(i).transpose());
  Eigen::VectorXd v(P.size());
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j) v(i * P.cols() + j) = P(i, j);
  return {v};
}

ParamPoint ParamPoint::g_prior(double alpha, const Eigen::VectorXd& beta, double sigma) {
  require_positive(sigma, "g_prior: sigma");
  Eigen::VectorXd v(beta.size() + 2);
  v << alpha, beta, sigma;
  return {v};
}

Eigen::VectorXd complete_simplex(const Eigen::Ref<const Eigen::VectorXd>& free_weights) {
  Eigen::VectorXd w(free_weights.size() + 1);
  w << free_weights, 1.0 - free_weights.sum();
  return w;
}

Dataset Dataset::observations(Eigen::VectorXd y) {
  Dataset d;
  d.n = y.size();
  d.y = std::move(y);
  return d;
}

Dataset Dataset::regression(Eigen::MatrixXd X, Eigen::VectorXd y) {
  if (X.rows() != y.size()) throw DomainError("regression: design rows differ from observations");
  Dataset d;
  d.n = y.size();
  d.y = std::move(y);
  d.X = std::move(X);
  return d;
}

Dataset Dataset::transition_counts(Eigen::MatrixXi counts) {
  if (counts.rows() != counts.cols()) throw DomainError("transition_counts: count matrix must be square");
  if ((counts.array() < 0).any()) throw DomainError("transition_counts: counts must be nonnegative");
  Dataset d;
  d.n = counts.sum();
  d.counts = std::move(counts);
  return d;
}

}  // namespace ebib
