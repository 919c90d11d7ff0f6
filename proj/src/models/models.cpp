#include "ebib/models/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "ebib/errors.hpp"
#include "ebib/numerics/quadrature.hpp"
#include "ebib/numerics/special.hpp"
#include "ebib/optim.hpp"
#include "ebib/samplers.hpp"

namespace ebib {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

const Eigen::MatrixXd& need_design(const Dataset& data, const char* who) {
  if (!data.X) throw DomainError(std::string(who) + ": design matrix required");
  return *data.X;
}

const Eigen::MatrixXd& need_gram(const ModelFamily& f, const char* who) {
  if (!f.constants().gram) throw DomainError(std::string(who) + ": family gram matrix required");
  return *f.constants().gram;
}

double log_inverse_gamma(double v, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(v) - rate / v;
}

double regression_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                         double intercept, double sigma2) {
  require(sigma2 > 0.0, "log_likelihood: variance must be positive");
  require(X.cols() == beta.size(), "log_likelihood: coefficient dimension mismatch");
  const double rss = ((y - X * beta).array() - intercept).square().sum();
  return -0.5 * static_cast<double>(y.size()) * (kLog2Pi + std::log(sigma2)) - 0.5 * rss / sigma2;
}

struct LassoParts {
  Eigen::VectorXd beta;
  double sigma2;
};

LassoParts lasso_parts(const ModelFamily& f, const Eigen::VectorXd& t) {
  if (f.constants().lasso_sigma == LassoSigma::Jeffreys) {
    require(t.size() >= 2, "bayes_lasso: θ must hold (β, σ²)");
    const double s2 = t(t.size() - 1);
    require(s2 > 0.0, "bayes_lasso: σ² must be positive");
    return {t.head(t.size() - 1), s2};
  }
  return {t, f.constants().sigma2};
}

struct MixtureParts {
  Eigen::VectorXd w, mean, var;
};

MixtureParts mixture_parts(const ModelFamily& f, const Eigen::VectorXd& t) {
  const int K = f.constants().K;
  const bool six = f.id() == FamilyId::GaussMixtureKnownK;
  require(t.size() == (six ? 3 * K - 1 : 2 * K - 1), "mixture: parameter dimension mismatch");
  MixtureParts m;
  m.w = complete_simplex(t.head(K - 1));
  require((m.w.array() >= -1e-12).all(), "mixture: weights must lie on the simplex");
  m.mean = t.segment(K - 1, K);
  m.var = six ? Eigen::VectorXd(t.segment(2 * K - 1, K)) : Eigen::VectorXd::Constant(K, f.constants().component_variance);
  require((m.var.array() > 0.0).all(), "mixture: variances must be positive");
  return m;
}

Eigen::MatrixXd transition_of(const ModelFamily& f, const Eigen::VectorXd& t) {
  const int K = f.constants().K;
  require(t.size() == K * K, "markov: transition matrix size mismatch");
  Eigen::MatrixXd P(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) P(i, j) = t(i * K + j);
  for (int i = 0; i < K; ++i) {
    require((P.row(i).array() >= 0.0).all(), "markov: transition probabilities must be nonnegative");
    require(std::abs(P.row(i).sum() - 1.0) <= 1e-9, "markov: transition rows must sum to 1");
  }
  return P;
}

void check_interior(const HyperParam& lambda, const char* who) {
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (!(lambda[i] > 0.0) || !std::isfinite(lambda[i]))
      throw DomainError(std::string(who) + ": hyperparameter must be positive and finite");
}

}  // namespace

double reduced_dirichlet_logpdf(const Eigen::Ref<const Eigen::VectorXd>& p,
                                const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  require(p.size() == alpha.size(), "reduced_dirichlet_logpdf: size mismatch");
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (alpha(j) > 0.0)
      active.push_back(j);
    else if (p(j) != 0.0)
      return -kInf;
  }
  if (active.size() <= 1) return 0.0;  // a point mass on one vertex
  double out = 0.0, asum = 0.0;
  for (auto j : active) {
    if (p(j) <= 0.0) return alpha(j) < 1.0 ? kInf : (alpha(j) == 1.0 ? 0.0 : -kInf);
    out += (alpha(j) - 1.0) * std::log(p(j)) - std::lgamma(alpha(j));
    asum += alpha(j);
  }
  return out + std::lgamma(asum);
}

bool has_orthogonal_columns(const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd G = X.transpose() * X;
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(G(i, j)) > 1e-9 * std::sqrt(G(i, i) * G(j, j))) return false;
  return true;
}

HyperParam make_hyper(const ModelFamily& f, const Eigen::VectorXd& values) {
  std::vector<std::string> names;
  switch (f.id()) {
    case FamilyId::NormalMean:
    case FamilyId::BayesLasso:
    case FamilyId::OverfittedMixture: names = {"lambda"}; break;
    case FamilyId::GPriorRegression: names = {"g"}; break;
    case FamilyId::IndepNormalRegression:
      for (Eigen::Index j = 0; j < values.size(); ++j) names.push_back("tau2_" + std::to_string(j + 1));
      break;
    case FamilyId::MarkovDirichlet: {
      const int K = f.constants().K;
      require(values.size() == K * K, "make_hyper: M4 needs K*K values");
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) names.push_back("alpha_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
      break;
    }
    case FamilyId::GaussMixtureKnownK: names = {"xi", "tau", "psi"}; break;
  }
  return HyperParam::named(std::move(names), values);
}

double log_likelihood(const ModelFamily& f, const ParamPoint& theta, const Dataset& data) {
  const auto& t = theta.values;
  switch (f.id()) {
    case FamilyId::NormalMean: {
      require(t.size() == 1, "M1: θ is scalar");
      const double s2 = f.constants().sigma2;
      return -0.5 * data.n * (kLog2Pi + std::log(s2)) - 0.5 * (data.y.array() - t(0)).square().sum() / s2;
    }
    case FamilyId::IndepNormalRegression:
      return regression_loglik(need_design(data, "M2"), data.y, t, 0.0, f.constants().sigma2);
    case FamilyId::GPriorRegression: {
      const Eigen::Index p = t.size() - 2;
      require(p >= 0 && t(p + 1) > 0.0, "M3: θ must be (α, β, σ) with σ > 0");
      return regression_loglik(need_design(data, "M3"), data.y, t.segment(1, p), t(0), t(p + 1) * t(p + 1));
    }
    case FamilyId::MarkovDirichlet: {
      const Eigen::MatrixXd P = transition_of(f, t);
      if (!data.counts) throw DomainError("M4: transition counts required");
      const auto& Y = *data.counts;
      require(Y.rows() == P.rows(), "M4: count matrix size mismatch");
      double out = 0.0;
      for (Eigen::Index i = 0; i < Y.rows(); ++i)
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
          if (Y(i, j) == 0) continue;
          if (P(i, j) == 0.0) return -kInf;
          out += Y(i, j) * std::log(P(i, j));
        }
      return out;
    }
    case FamilyId::BayesLasso: {
      const LassoParts lp = lasso_parts(f, t);
      return regression_loglik(need_design(data, "M5"), data.y, lp.beta, 0.0, lp.sigma2);
    }
    case FamilyId::GaussMixtureKnownK:
    case FamilyId::OverfittedMixture: {
      const MixtureParts m = mixture_parts(f, t);
      double out = 0.0;
      for (Eigen::Index i = 0; i < data.y.size(); ++i) {
        Eigen::VectorXd terms(m.w.size());
        for (Eigen::Index k = 0; k < m.w.size(); ++k)
          terms(k) = std::log(m.w(k)) + numerics::normal_logpdf(data.y(i), m.mean(k), m.var(k));
        out += numerics::log_sum_exp(terms);
      }
      return out;
    }
  }
  throw DomainError("log_likelihood: unknown family");
}

double log_prior(const ModelFamily& f, const ParamPoint& theta, const HyperParam& lambda) {
  const auto& t = theta.values;
  const auto& c = f.constants();
  switch (f.id()) {
    case FamilyId::NormalMean:
      check_interior(lambda, "M1 prior");
      return numerics::normal_logpdf(t(0), 0.0, lambda[0]);
    case FamilyId::IndepNormalRegression: {
      check_interior(lambda, "M2 prior");
      require(lambda.size() == t.size(), "M2 prior: one variance per coefficient");
      double out = 0.0;
      for (Eigen::Index j = 0; j < t.size(); ++j) out += numerics::normal_logpdf(t(j), 0.0, lambda[j]);
      return out;
    }
    case FamilyId::GPriorRegression: {
      check_interior(lambda, "M3 prior");
      const Eigen::Index p = t.size() - 2;
      const double sigma = t(p + 1);
      require(sigma > 0.0, "M3 prior: σ must be positive");
      const Eigen::MatrixXd& V = need_gram(f, "M3 prior");
      require(V.rows() == p, "M3 prior: gram dimension mismatch");
      Eigen::LLT<Eigen::MatrixXd> llt(V);
      const double logdetV = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      const Eigen::VectorXd beta = t.segment(1, p);
      const double g = lambda[0];
      return -0.5 * p * (kLog2Pi + std::log(g * sigma * sigma)) + 0.5 * logdetV -
             beta.dot(V * beta) / (2.0 * g * sigma * sigma) - std::log(sigma);
    }
    case FamilyId::MarkovDirichlet: {
      const Eigen::MatrixXd P = transition_of(f, t);
      const int K = c.K;
      require(lambda.size() == K * K, "M4 prior: α must be K×K");
      double out = 0.0;
      for (int i = 0; i < K; ++i) {
        const Eigen::VectorXd a = lambda.values.segment(i * K, K);
        require((a.array() >= 0.0).all(), "M4 prior: α must be nonnegative");
        out += reduced_dirichlet_logpdf(P.row(i).transpose(), a);
      }
      return out;
    }
    case FamilyId::BayesLasso: {
      check_interior(lambda, "M5 prior");
      const LassoParts lp = lasso_parts(f, t);
      const double sigma = std::sqrt(lp.sigma2);
      const double lam = lambda[0];
      double out = lp.beta.size() * std::log(lam / (2.0 * sigma)) - lam * lp.beta.cwiseAbs().sum() / sigma;
      if (c.lasso_sigma == LassoSigma::Jeffreys) out -= std::log(lp.sigma2);
      return out;
    }
    case FamilyId::GaussMixtureKnownK: {
      require(lambda.size() == 3, "M6 prior: λ is (ξ, τ, ψ)");
      require(std::isfinite(lambda[0]), "M6 prior: ξ must be finite");
      check_interior(HyperParam::named({"tau", "psi"}, lambda.values.tail(2)), "M6 prior");
      const MixtureParts m = mixture_parts(f, t);
      const double xi = lambda[0], tau = lambda[1], psi = lambda[2];
      double out = std::lgamma(static_cast<double>(c.K));  // Dir(1, ..., 1)
      for (Eigen::Index k = 0; k < m.w.size(); ++k) {
        out += numerics::normal_logpdf(m.mean(k), xi, m.var(k) / tau);
        out += log_inverse_gamma(m.var(k), 0.5 * c.omega, 0.5 * psi);
      }
      return out;
    }
    case FamilyId::OverfittedMixture: {
      check_interior(lambda, "M7 prior");
      const MixtureParts m = mixture_parts(f, t);
      double out = numerics::log_gamma(c.K * lambda[0]) - c.K * numerics::log_gamma(lambda[0]);
      for (Eigen::Index k = 0; k < m.w.size(); ++k) {
        if (m.w(k) <= 0.0) throw DomainError("M7 prior: weights must be strictly positive");
        out += (lambda[0] - 1.0) * std::log(m.w(k));
        out += numerics::normal_logpdf(m.mean(k), c.location_prior_mean, c.location_prior_variance);
      }
      return out;
    }
  }
  throw DomainError("log_prior: unknown family");
}

Eigen::VectorXd prior_gradient(const ModelFamily& f, const ParamPoint& theta, const HyperParam& lambda) {
  const auto& t = theta.values;
  const auto& c = f.constants();
  switch (f.id()) {
    case FamilyId::NormalMean:
      check_interior(lambda, "M1 prior");
      return Eigen::VectorXd::Constant(1, -t(0) / lambda[0]);
    case FamilyId::IndepNormalRegression:
      check_interior(lambda, "M2 prior");
      return -t.cwiseQuotient(lambda.values);
    case FamilyId::GPriorRegression: {
      check_interior(lambda, "M3 prior");
      const Eigen::Index p = t.size() - 2;
      const double sigma = t(p + 1), g = lambda[0];
      const Eigen::MatrixXd& V = need_gram(f, "M3 prior");
      const Eigen::VectorXd beta = t.segment(1, p);
      const Eigen::VectorXd Vb = V * beta;
      Eigen::VectorXd out(p + 2);
      out(0) = 0.0;
      out.segment(1, p) = -Vb / (g * sigma * sigma);
      out(p + 1) = -static_cast<double>(p) / sigma + beta.dot(Vb) / (g * sigma * sigma * sigma) - 1.0 / sigma;
      return out;
    }
    case FamilyId::MarkovDirichlet: {
      const Eigen::MatrixXd P = transition_of(f, t);
      Eigen::VectorXd out(t.size());
      for (Eigen::Index k = 0; k < t.size(); ++k) {
        const double a = lambda[k];
        if (a == 0.0) {
          out(k) = 0.0;
          continue;
        }
        if (!(t(k) > 0.0)) throw NonDifferentiableError("M4 prior: gradient undefined on the simplex boundary");
        out(k) = (a - 1.0) / t(k);
      }
      return out;
    }
    case FamilyId::BayesLasso: {
      check_interior(lambda, "M5 prior");
      const LassoParts lp = lasso_parts(f, t);
      const double sigma = std::sqrt(lp.sigma2), lam = lambda[0];
      const Eigen::Index d = lp.beta.size();
      Eigen::VectorXd out(t.size());
      for (Eigen::Index j = 0; j < d; ++j) {
        if (lp.beta(j) == 0.0) throw NonDifferentiableError("M5 prior: gradient undefined at β_j = 0");
        out(j) = -lam * (lp.beta(j) > 0.0 ? 1.0 : -1.0) / sigma;
      }
      if (c.lasso_sigma == LassoSigma::Jeffreys)
        out(d) = -static_cast<double>(d) / (2.0 * lp.sigma2) +
                 lam * lp.beta.cwiseAbs().sum() / (2.0 * lp.sigma2 * sigma) - 1.0 / lp.sigma2;
      return out;
    }
    case FamilyId::GaussMixtureKnownK: {
      const MixtureParts m = mixture_parts(f, t);
      const int K = c.K;
      const double xi = lambda[0], tau = lambda[1], psi = lambda[2];
      Eigen::VectorXd out = Eigen::VectorXd::Zero(t.size());
      for (int k = 0; k < K; ++k) {
        const double r = m.mean(k) - xi, v = m.var(k);
        out(K - 1 + k) = -tau * r / v;
        out(2 * K - 1 + k) = -0.5 / v + tau * r * r / (2.0 * v * v) - (0.5 * c.omega + 1.0) / v + 0.5 * psi / (v * v);
      }
      return out;
    }
    case FamilyId::OverfittedMixture: {
      check_interior(lambda, "M7 prior");
      const MixtureParts m = mixture_parts(f, t);
      const int K = c.K;
      const double lam = lambda[0];
      Eigen::VectorXd out(t.size());
      if ((m.w.array() <= 0.0).any()) throw NonDifferentiableError("M7 prior: gradient undefined on the simplex boundary");
      for (int k = 0; k < K - 1; ++k) out(k) = (lam - 1.0) / m.w(k) - (lam - 1.0) / m.w(K - 1);
      for (int k = 0; k < K; ++k) out(K - 1 + k) = -(m.mean(k) - c.location_prior_mean) / c.location_prior_variance;
      return out;
    }
  }
  throw DomainError("prior_gradient: unknown family");
}

HyperParam oracle_hyperparameter(const ModelFamily& f, const ParamPoint& theta0) {
  const auto& t = theta0.values;
  const auto& c = f.constants();
  switch (f.id()) {
    case FamilyId::NormalMean: return make_hyper(f, Eigen::VectorXd::Constant(1, t(0) * t(0)));
    case FamilyId::IndepNormalRegression: return make_hyper(f, t.array().square().matrix());
    case FamilyId::GPriorRegression: {
      const Eigen::Index p = t.size() - 2;
      if (p <= 0) throw DomainError("M3 oracle: need at least one coefficient");
      const double sigma = t(p + 1);
      const Eigen::MatrixXd& V = need_gram(f, "M3 oracle");
      const Eigen::VectorXd beta = t.segment(1, p);
      return make_hyper(f, Eigen::VectorXd::Constant(1, beta.dot(V * beta) / (sigma * sigma * p)));
    }
    case FamilyId::MarkovDirichlet: {
      const Eigen::MatrixXd P = transition_of(f, t);
      const int K = c.K;
      Eigen::VectorXd alpha = Eigen::VectorXd::Zero(K * K);
      for (int i = 0; i < K; ++i) {
        std::vector<int> active;
        for (int j = 0; j < K; ++j)
          if (P(i, j) > 0.0) active.push_back(j);
        const auto m = static_cast<Eigen::Index>(active.size());
        if (m == 1) {
          // Single reachable state: the reduced density is a point mass, constant in α.
          alpha(i * K + active[0]) = c.alpha_lower;
          continue;
        }
        Eigen::VectorXd p(m);
        for (Eigen::Index a = 0; a < m; ++a) p(a) = P(i, active[a]);
        optim::Box box{Eigen::VectorXd::Constant(m, c.alpha_lower), Eigen::VectorXd::Constant(m, c.alpha_upper)};
        optim::NelderMeadOptions opt;
        opt.seed = derive_seed(0x4d34, {static_cast<std::uint64_t>(i)});
        const auto res = optim::nelder_mead_box_max(
            [&](const Eigen::VectorXd& a) { return reduced_dirichlet_logpdf(p, a); }, box, opt);
        for (Eigen::Index a = 0; a < m; ++a) alpha(i * K + active[a]) = res.x(a);
      }
      return make_hyper(f, alpha);
    }
    case FamilyId::BayesLasso: {
      const LassoParts lp = lasso_parts(f, t);
      const double l1 = lp.beta.cwiseAbs().sum();
      if (!(l1 > 0.0)) throw DegenerateOracleError("M5 oracle: all coefficients are zero");
      return make_hyper(f, Eigen::VectorXd::Constant(1, lp.beta.size() * std::sqrt(lp.sigma2) / l1));
    }
    case FamilyId::GaussMixtureKnownK: {
      const MixtureParts m = mixture_parts(f, t);
      const double K = c.K;
      const Eigen::ArrayXd inv = m.var.array().inverse();
      const double xi = (m.mean.array() * inv).sum() / inv.sum();
      const double spread = ((m.mean.array() - xi).square() * inv).sum();
      const double range = m.mean.maxCoeff() - m.mean.minCoeff();
      if (!(range > 1e-12 * std::max(1.0, m.mean.cwiseAbs().maxCoeff())) || !(spread > 0.0))
        throw DegenerateOracleError("M6 oracle: all component means are equal");
      Eigen::Vector3d v(xi, K / spread, K * c.omega / inv.sum());
      return make_hyper(f, v);
    }
    case FamilyId::OverfittedMixture: return make_hyper(f, Eigen::VectorXd::Zero(1));
  }
  throw DomainError("oracle_hyperparameter: unknown family");
}

Eigen::MatrixXd fisher_information(const ModelFamily& f, const ParamPoint& theta0) {
  const auto& t = theta0.values;
  const auto& c = f.constants();
  switch (f.id()) {
    case FamilyId::NormalMean: return Eigen::MatrixXd::Constant(1, 1, 1.0 / c.sigma2);
    case FamilyId::GPriorRegression: {
      const Eigen::Index p = t.size() - 2;
      const double s2 = t(p + 1) * t(p + 1);
      const Eigen::MatrixXd& V = need_gram(f, "M3 fisher");
      Eigen::MatrixXd I = Eigen::MatrixXd::Zero(p + 2, p + 2);
      I(0, 0) = 1.0 / s2;
      I.block(1, 1, p, p) = V / s2;
      I(p + 1, p + 1) = 2.0 / s2;
      return I;
    }
    case FamilyId::BayesLasso: {
      if (c.lasso_sigma != LassoSigma::Fixed) throw CapabilityError("M5 fisher: only the known-σ variant");
      return need_gram(f, "M5 fisher") / c.sigma2;
    }
    case FamilyId::GaussMixtureKnownK: {
      const MixtureParts m = mixture_parts(f, t);
      const int K = c.K;
      const Eigen::Index dim = t.size();
      auto score = [&](double y, Eigen::VectorXd& g) {
        Eigen::VectorXd phi(K);
        for (int k = 0; k < K; ++k) phi(k) = std::exp(numerics::normal_logpdf(y, m.mean(k), m.var(k)));
        for (int k = 0; k < K - 1; ++k) g(k) = phi(k) - phi(K - 1);
        for (int k = 0; k < K; ++k) {
          const double r = y - m.mean(k), v = m.var(k);
          g(K - 1 + k) = m.w(k) * phi(k) * r / v;
          g(2 * K - 1 + k) = m.w(k) * phi(k) * (r * r / (2.0 * v * v) - 0.5 / v);
        }
        return m.w.dot(phi);
      };
      const double sd = std::sqrt(m.var.maxCoeff());
      const double lo = m.mean.minCoeff() - 14.0 * sd, hi = m.mean.maxCoeff() + 14.0 * sd;
      Eigen::MatrixXd I(dim, dim);
      numerics::QuadratureSpec spec;
      spec.abs_tol = 1e-11;
      for (Eigen::Index a = 0; a < dim; ++a)
        for (Eigen::Index b = a; b < dim; ++b) {
          const double v = numerics::integrate(
              [&](double y) {
                Eigen::VectorXd g(dim);
                const double dens = score(y, g);
                return dens > 0.0 ? g(a) * g(b) / dens : 0.0;
              },
              lo, hi, spec);
          I(a, b) = I(b, a) = v;
        }
      return I;
    }
    default: throw CapabilityError("fisher_information: not available for " + std::string(family_code(f.id())));
  }
}

PosteriorRep posterior(const ModelFamily& f, const HyperParam& lambda, const Dataset& data,
                       const PosteriorOptions& options) {
  const auto& c = f.constants();
  switch (f.id()) {
    case FamilyId::NormalMean: {
      const double lam = lambda[0], s2 = c.sigma2, n = static_cast<double>(data.n);
      require(lam >= 0.0, "M1 posterior: λ must be nonnegative");
      const double ybar = data.n > 0 ? data.y.mean() : 0.0;
      if (std::isinf(lam)) {
        if (data.n == 0) throw InsufficientDataError("M1 posterior: flat prior needs data");
        return ClosedGaussian{Eigen::VectorXd::Constant(1, ybar), Eigen::MatrixXd::Constant(1, 1, s2 / n)};
      }
      return ClosedGaussian{Eigen::VectorXd::Constant(1, n * lam * ybar / (n * lam + s2)),
                            Eigen::MatrixXd::Constant(1, 1, lam * s2 / (n * lam + s2))};
    }
    case FamilyId::IndepNormalRegression: {
      const Eigen::MatrixXd& X = need_design(data, "M2 posterior");
      const Eigen::Index d = X.cols();
      require(lambda.size() == d, "M2 posterior: one variance per coefficient");
      std::vector<Eigen::Index> act;
      for (Eigen::Index j = 0; j < d; ++j) {
        require(lambda[j] >= 0.0, "M2 posterior: variances must be nonnegative");
        if (lambda[j] > 0.0) act.push_back(j);
      }
      ClosedGaussian out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
      const auto k = static_cast<Eigen::Index>(act.size());
      if (k == 0) return out;
      Eigen::MatrixXd Xa(X.rows(), k);
      for (Eigen::Index a = 0; a < k; ++a) Xa.col(a) = X.col(act[a]);
      Eigen::MatrixXd P = Xa.transpose() * Xa / c.sigma2;
      for (Eigen::Index a = 0; a < k; ++a) P(a, a) += 1.0 / lambda[act[a]];
      Eigen::LLT<Eigen::MatrixXd> llt(P);
      const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(k, k));
      const Eigen::VectorXd mean = llt.solve(Xa.transpose() * data.y / c.sigma2);
      for (Eigen::Index a = 0; a < k; ++a) {
        out.mean(act[a]) = mean(a);
        for (Eigen::Index b = 0; b < k; ++b) out.cov(act[a], act[b]) = cov(a, b);
      }
      return out;
    }
    case FamilyId::GPriorRegression: {
      const Eigen::MatrixXd& X = need_design(data, "M3 posterior");
      const Eigen::Index p = X.cols(), n = data.n;
      if (n <= p + 2) throw InsufficientDataError("M3 posterior: improper unless n > d");
      check_interior(lambda, "M3 posterior");
      const Eigen::RowVectorXd colmean = X.colwise().mean();
      if (colmean.cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, X.cwiseAbs().maxCoeff()))
        throw DomainError("M3 posterior: design columns must be centered");
      const double g = lambda[0], shrink = n * g / (n * g + 1.0);
      const Eigen::MatrixXd xtx = X.transpose() * X;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
      const Eigen::VectorXd bhat = ldlt.solve(X.transpose() * data.y);
      const double ybar = data.y.mean();
      const double sse = ((data.y.array() - ybar).matrix() - X * bhat).squaredNorm();
      NormalInverseGamma out;
      out.alpha_mean = ybar;
      out.n = static_cast<double>(n);
      out.beta_mean = shrink * bhat;
      out.beta_scale = shrink * ldlt.solve(Eigen::MatrixXd::Identity(p, p));
      out.shape = 0.5 * static_cast<double>(n - 1);
      out.rate = 0.5 * sse + bhat.dot(xtx * bhat) / (2.0 * (n * g + 1.0));
      return out;
    }
    case FamilyId::MarkovDirichlet: {
      if (!data.counts) throw DomainError("M4 posterior: transition counts required");
      const int K = c.K;
      const auto& Y = *data.counts;
      Engine rng(derive_seed(options.seed, {stream::monte_carlo}));
      WeightedSamples s;
      s.seed = options.seed;
      s.draws = Eigen::MatrixXd::Zero(options.draws, K * K);
      s.weights = Eigen::VectorXd::Ones(options.draws);
      for (int i = 0; i < K; ++i) {
        std::vector<int> act;
        for (int j = 0; j < K; ++j) {
          const double a = lambda[i * K + j];
          require(a >= 0.0, "M4 posterior: α must be nonnegative");
          if (a > 0.0) act.push_back(j);
          else if (Y(i, j) > 0) throw DomainError("M4 posterior: positive count in a structural-zero cell");
        }
        if (act.empty()) throw DomainError("M4 posterior: row without support");
        Eigen::VectorXd a(act.size());
        for (std::size_t q = 0; q < act.size(); ++q) a(q) = lambda[i * K + act[q]] + Y(i, act[q]);
        for (Eigen::Index r = 0; r < options.draws; ++r) {
          const Eigen::VectorXd p = act.size() == 1 ? Eigen::VectorXd::Ones(1) : random::dirichlet(rng, a);
          for (std::size_t q = 0; q < act.size(); ++q) s.draws(r, i * K + act[q]) = p(q);
        }
      }
      return s;
    }
    case FamilyId::BayesLasso: {
      check_interior(lambda, "M5 posterior");
      const Eigen::MatrixXd& X = need_design(data, "M5 posterior");
      const Eigen::Index d = X.cols();
      if (c.lasso_sigma == LassoSigma::Fixed && has_orthogonal_columns(X)) {
        const double sigma = std::sqrt(c.sigma2);
        LaplaceGaussianProduct out;
        out.rate = lambda[0] / sigma;
        out.center.resize(d);
        out.scale.resize(d);
        for (Eigen::Index j = 0; j < d; ++j) {
          const double nx = X.col(j).norm();
          out.center(j) = X.col(j).dot(data.y) / (nx * nx);
          out.scale(j) = sigma / nx;
        }
        return out;
      }
      GibbsConfig cfg;
      cfg.burnin = 1000;
      cfg.iters = static_cast<int>(options.draws) + cfg.burnin;
      cfg.seed = options.seed;
      const ChainOutput chain = gibbs_lasso(data, lambda[0], c.lasso_sigma, c.sigma2, cfg);
      WeightedSamples s;
      s.seed = options.seed;
      if (c.lasso_sigma == LassoSigma::Jeffreys) {
        s.draws.resize(chain.draws.rows(), d + 1);
        s.draws << chain.draws.leftCols(d), chain.draws.col(2 * d);
      } else {
        s.draws = chain.draws.leftCols(d);
      }
      s.weights = Eigen::VectorXd::Ones(s.draws.rows());
      return s;
    }
    case FamilyId::GaussMixtureKnownK:
    case FamilyId::OverfittedMixture: {
      const int K = c.K;
      GibbsConfig cfg;
      cfg.burnin = 500;
      cfg.iters = static_cast<int>(options.draws) + cfg.burnin;
      cfg.seed = options.seed;
      ChainOutput chain;
      Eigen::MatrixXd theta;
      if (f.id() == FamilyId::OverfittedMixture) {
        check_interior(lambda, "M7 posterior");
        mixture::NormalKnownVariance base{c.component_variance, c.location_prior_mean, c.location_prior_variance};
        chain = gibbs_mixture(data.y, Eigen::VectorXd::Constant(K, lambda[0]), base, cfg);
        theta.resize(chain.draws.rows(), 2 * K - 1);
        theta << chain.draws.leftCols(K - 1), chain.draws.middleCols(2 * K, K);
      } else {
        require(lambda[1] > 0.0 && lambda[2] > 0.0, "M6 posterior: τ and ψ must be positive");
        mixture::NormalInverseGammaBase base{lambda[0], lambda[1], c.omega, lambda[2]};
        chain = gibbs_mixture(data.y, Eigen::VectorXd::Ones(K), base, cfg);
        theta.resize(chain.draws.rows(), 3 * K - 1);
        theta << chain.draws.leftCols(K - 1), chain.draws.middleCols(2 * K, 2 * K);
      }
      return WeightedSamples{theta, Eigen::VectorXd::Ones(theta.rows()), options.seed};
    }
  }
  throw DomainError("posterior: unknown family");
}

}  // namespace ebib
