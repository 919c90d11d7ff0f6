#include "ebib/samplers.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

#include <Eigen/Cholesky>

#include "ebib/errors.hpp"

namespace ebib {

void GibbsConfig::validate() const {
  if (!(iters > burnin && burnin >= 0)) throw ValidationError("gibbs: need iters > burnin >= 0");
  if (thin < 1) throw ValidationError("gibbs: thin must be >= 1");
}

double chain_ess(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  if (n < 4) return static_cast<double>(n);
  const Eigen::VectorXd c = x.array() - x.mean();
  const double c0 = c.squaredNorm() / n;
  if (!(c0 > 0.0)) return static_cast<double>(n);
  auto rho = [&](Eigen::Index lag) { return c.head(n - lag).dot(c.tail(n - lag)) / (n * c0); };
  double sum = 0.0;
  for (Eigen::Index m = 0; 2 * m + 1 < n / 2; ++m) {
    const double pair = (m == 0 ? 1.0 : rho(2 * m)) + rho(2 * m + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  const double tau = std::max(1.0 / n, 2.0 * sum - 1.0);
  return std::min(static_cast<double>(n), n / tau);
}

double batch_means_stderr(const Eigen::Ref<const Eigen::VectorXd>& x, int batches) {
  const Eigen::Index n = x.size();
  if (n < 2 * batches) batches = static_cast<int>(std::max<Eigen::Index>(2, n / 2));
  const Eigen::Index b = n / batches;
  if (b < 1) return std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd means(batches);
  for (int k = 0; k < batches; ++k) means(k) = x.segment(k * b, b).mean();
  const double m = means.mean();
  const double var = (means.array() - m).square().sum() / (batches - 1);
  return std::sqrt(var / batches);
}

Eigen::MatrixXd uniform_design(Eigen::Index n, Eigen::Index d, double lo, double hi, std::uint64_t seed) {
  Engine rng(seed);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = lo + (hi - lo) * random::uniform(rng);
  return X;
}

namespace {

Eigen::MatrixXd gaussian_design(Eigen::Index n, Eigen::Index d, const std::optional<Eigen::MatrixXd>& gram,
                                std::uint64_t seed) {
  Engine rng(seed);
  Eigen::MatrixXd Z(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) Z(i, j) = random::standard_normal(rng);
  if (gram) {
    Eigen::LLT<Eigen::MatrixXd> llt(*gram);
    if (llt.info() != Eigen::Success) throw DomainError("simulate: gram is not SPD");
    Z = Z * llt.matrixL().transpose();
  }
  return Z;
}

Eigen::MatrixXd take_design(const ModelFamily& family, Eigen::Index n) {
  const auto& D = *family.constants().design;
  if (D.rows() != n) throw DomainError("simulate: family design has " + std::to_string(D.rows()) + " rows, need n");
  return D;
}

}  // namespace

Dataset simulate(const ModelFamily& family, const ParamPoint& theta0, Eigen::Index n, std::uint64_t seed) {
  if (n < 0) throw DomainError("simulate: n must be nonnegative");
  const auto& c = family.constants();
  const auto& t = theta0.values;
  Engine rng(derive_seed(seed, {stream::data}));
  const std::uint64_t design_seed = derive_seed(seed, {stream::design});
  switch (family.id()) {
    case FamilyId::NormalMean: {
      Eigen::VectorXd y(n);
      const double s = std::sqrt(c.sigma2);
      for (Eigen::Index i = 0; i < n; ++i) y(i) = t(0) + s * random::standard_normal(rng);
      return Dataset::observations(y);
    }
    case FamilyId::IndepNormalRegression:
    case FamilyId::BayesLasso: {
      const bool lasso = family.id() == FamilyId::BayesLasso;
      const bool jeff = lasso && c.lasso_sigma == LassoSigma::Jeffreys;
      const Eigen::Index d = jeff ? t.size() - 1 : t.size();
      const Eigen::VectorXd beta = t.head(d);
      const double sigma = std::sqrt(jeff ? t(d) : c.sigma2);
      Eigen::MatrixXd X = c.design ? take_design(family, n)
                          : lasso  ? uniform_design(n, d, -10.0, 10.0, design_seed)
                                   : gaussian_design(n, d, c.gram, design_seed);
      Eigen::VectorXd y = X * beta;
      for (Eigen::Index i = 0; i < n; ++i) y(i) += sigma * random::standard_normal(rng);
      return Dataset::regression(std::move(X), std::move(y));
    }
    case FamilyId::GPriorRegression: {
      const Eigen::Index p = t.size() - 2;
      const double alpha = t(0), sigma = t(p + 1);
      Eigen::MatrixXd X = c.design ? take_design(family, n) : gaussian_design(n, p, c.gram, design_seed);
      if (!c.design && n > 0) X.rowwise() -= X.colwise().mean();
      Eigen::VectorXd y = (X * t.segment(1, p)).array() + alpha;
      for (Eigen::Index i = 0; i < n; ++i) y(i) += sigma * random::standard_normal(rng);
      return Dataset::regression(std::move(X), std::move(y));
    }
    case FamilyId::MarkovDirichlet: {
      const int K = c.K;
      if (t.size() != K * K) throw DomainError("simulate: transition matrix size mismatch");
      Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(K, K);
      std::vector<int> path{0};
      int state = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd row = t.segment(state * K, K);
        double u = random::uniform(rng), acc = 0.0;
        int next = K - 1;
        for (int j = 0; j < K; ++j) {
          acc += row(j);
          if (u < acc && row(j) > 0.0) {
            next = j;
            break;
          }
        }
        while (row(next) <= 0.0) --next;
        ++counts(state, next);
        state = next;
        path.push_back(state);
      }
      Dataset d = Dataset::transition_counts(counts);
      d.path = std::move(path);
      return d;
    }
    case FamilyId::GaussMixtureKnownK:
    case FamilyId::OverfittedMixture: {
      const int K = c.K;
      const bool six = family.id() == FamilyId::GaussMixtureKnownK;
      const Eigen::VectorXd w = complete_simplex(t.head(K - 1));
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = random::uniform(rng);
        double acc = 0.0;
        int k = K - 1;
        for (int j = 0; j < K; ++j) {
          acc += w(j);
          if (u < acc) {
            k = j;
            break;
          }
        }
        const double mean = t(K - 1 + k);
        const double var = six ? t(2 * K - 1 + k) : c.component_variance;
        y(i) = mean + std::sqrt(var) * random::standard_normal(rng);
      }
      return Dataset::observations(y);
    }
  }
  throw DomainError("simulate: unknown family");
}

LassoGibbs::LassoGibbs(const Dataset& data, LassoSigma mode, double sigma2_fixed, std::uint64_t seed)
    : mode_(mode), sigma2_(sigma2_fixed), rng_(derive_seed(seed, {stream::chain})), seed_(seed) {
  if (!data.X) throw DomainError("gibbs_lasso: design matrix required");
  X_ = *data.X;
  y_ = data.y;
  const Eigen::Index n = X_.rows(), d = X_.cols();
  if (d >= n) throw InsufficientDataError("gibbs_lasso: need d < n");
  xtx_ = X_.transpose() * X_;
  xty_ = X_.transpose() * y_;
  beta_ = xtx_.ldlt().solve(xty_);
  tau2_.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) tau2_(j) = std::abs(beta_(j)) < 1e-12 ? 1e-6 : beta_(j) * beta_(j);
  if (mode_ == LassoSigma::Jeffreys) {
    sigma2_ = std::max(1e-8, (y_ - X_ * beta_).squaredNorm() / static_cast<double>(n - d));
  } else if (!(sigma2_ > 0.0)) {
    throw DomainError("gibbs_lasso: fixed sigma2 must be positive");
  }
}

void LassoGibbs::fix_tau2(const Eigen::VectorXd& tau2) {
  if (tau2.size() != tau2_.size() || (tau2.array() <= 0.0).any())
    throw DomainError("fix_tau2: need positive values, one per coefficient");
  fixed_tau2_ = tau2;
  tau2_ = tau2;
}

void LassoGibbs::sweep(double lambda, long iteration) {
  const Eigen::Index n = X_.rows(), d = X_.cols();
  Eigen::MatrixXd A = xtx_;
  A.diagonal() += tau2_.cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt(A / sigma2_);
  if (llt.info() != Eigen::Success) throw SamplerError("gibbs_lasso: precision not SPD", iteration);
  beta_ = random::gaussian_from_precision(rng_, llt.matrixL(), xty_ / sigma2_);
  if (!fixed_tau2_) {
    const double sigma = std::sqrt(sigma2_);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double b = std::max(std::abs(beta_(j)), 1e-300);
      const double w = random::inverse_gaussian(rng_, lambda * sigma / b, lambda * lambda);
      tau2_(j) = 1.0 / w;
    }
  }
  if (mode_ == LassoSigma::Jeffreys) {
    const double rss = (y_ - X_ * beta_).squaredNorm();
    const double pen = (beta_.array().square() / tau2_.array()).sum();
    sigma2_ = random::inverse_gamma(rng_, 0.5 * static_cast<double>(n + d), 0.5 * (rss + pen));
  }
  if (!beta_.allFinite() || !tau2_.allFinite() || !std::isfinite(sigma2_) || !(sigma2_ > 0.0) ||
      (tau2_.array() <= 0.0).any())
    throw SamplerError("gibbs_lasso: non-finite draw", iteration);
}

ChainOutput LassoGibbs::run(double lambda, const GibbsConfig& cfg) {
  cfg.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("gibbs_lasso: lambda must be positive");
  const Eigen::Index d = X_.cols();
  const int kept = (cfg.iters - cfg.burnin + cfg.thin - 1) / cfg.thin;
  ChainOutput out;
  out.seed = seed_;
  out.draws.resize(kept, 2 * d + 1);
  for (Eigen::Index j = 0; j < d; ++j) out.names.push_back("beta_" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < d; ++j) out.names.push_back("tau2_" + std::to_string(j + 1));
  out.names.push_back("sigma2");
  double tau_acc = 0.0;
  int row = 0;
  for (int it = 0; it < cfg.iters; ++it) {
    sweep(lambda, it);
    if (it >= cfg.burnin && (it - cfg.burnin) % cfg.thin == 0) {
      out.draws.row(row).head(d) = beta_.transpose();
      out.draws.row(row).segment(d, d) = tau2_.transpose();
      out.draws(row, 2 * d) = sigma2_;
      const double sigma = std::sqrt(sigma2_);
      tau_acc += (beta_.array().abs() / (lambda * sigma)).sum() + d / (lambda * lambda);
      ++row;
    }
  }
  last_tau2_sum_ = tau_acc / row;
  out.ess.resize(out.draws.cols());
  for (Eigen::Index j = 0; j < out.draws.cols(); ++j) out.ess(j) = chain_ess(out.draws.col(j));
  return out;
}

ChainOutput gibbs_lasso(const Dataset& data, double lambda, LassoSigma mode, double sigma2_fixed,
                        const GibbsConfig& cfg) {
  LassoGibbs chain(data, mode, sigma2_fixed, cfg.seed);
  return chain.run(lambda, cfg);
}

namespace {

template <class Base>
constexpr int params_per_cluster() {
  if constexpr (std::is_same_v<Base, mixture::NormalInverseGammaBase>)
    return 2;
  else
    return 1;
}

}  // namespace

template <class Base>
ChainOutput gibbs_mixture(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::VectorXd& alpha, const Base& base,
                          const GibbsConfig& cfg) {
  cfg.validate();
  const Eigen::Index K = alpha.size(), n = y.size();
  if (K < 2) throw DomainError("gibbs_mixture: need K >= 2");
  if ((alpha.array() <= 0.0).any()) throw DomainError("gibbs_mixture: alpha must be positive");
  Engine rng(derive_seed(cfg.seed, {stream::chain}));
  std::vector<int> z(n);
  std::vector<mixture::ClusterStats> stats(K);
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = static_cast<int>(std::min<double>(K - 1, std::floor(random::uniform(rng) * K)));
    stats[z[i]].add(y(i));
  }
  constexpr int ppc = params_per_cluster<Base>();
  const int kept = (cfg.iters - cfg.burnin + cfg.thin - 1) / cfg.thin;
  ChainOutput out;
  out.seed = cfg.seed;
  out.draws.resize(kept, K * (2 + ppc));
  for (Eigen::Index k = 0; k < K; ++k) out.names.push_back("p_" + std::to_string(k + 1));
  for (Eigen::Index k = 0; k < K; ++k) out.names.push_back("n_" + std::to_string(k + 1));
  if constexpr (ppc == 1) {
    for (Eigen::Index k = 0; k < K; ++k) out.names.push_back("gamma_" + std::to_string(k + 1));
  } else {
    for (Eigen::Index k = 0; k < K; ++k) out.names.push_back("mu_" + std::to_string(k + 1));
    for (Eigen::Index k = 0; k < K; ++k) out.names.push_back("v_" + std::to_string(k + 1));
  }
  Eigen::VectorXd logw(K);
  int row = 0;
  for (int it = 0; it < cfg.iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      stats[z[i]].remove(y(i));
      for (Eigen::Index k = 0; k < K; ++k)
        logw(k) = std::log(stats[k].count + alpha(k)) + base.log_predictive(stats[k], y(i));
      if (!logw.allFinite()) throw SamplerError("gibbs_mixture: non-finite allocation weight", it);
      z[i] = random::categorical_from_log(rng, logw);
      stats[z[i]].add(y(i));
    }
    // Label transposition: the likelihood is invariant, so only the allocation prior enters.
    {
      const auto a = static_cast<Eigen::Index>(std::floor(random::uniform(rng) * K)) % K;
      const auto b = (a + 1 + static_cast<Eigen::Index>(std::floor(random::uniform(rng) * (K - 1))) % (K - 1)) % K;
      const double na = stats[a].count, nb = stats[b].count;
      const double log_ratio = std::lgamma(nb + alpha(a)) + std::lgamma(na + alpha(b)) - std::lgamma(na + alpha(a)) -
                               std::lgamma(nb + alpha(b));
      if (std::log(random::uniform(rng)) < log_ratio) {
        std::swap(stats[a], stats[b]);
        for (auto& zi : z) zi = zi == a ? static_cast<int>(b) : zi == b ? static_cast<int>(a) : zi;
      }
    }
    if (it >= cfg.burnin && (it - cfg.burnin) % cfg.thin == 0) {
      Eigen::VectorXd counts(K);
      for (Eigen::Index k = 0; k < K; ++k) counts(k) = stats[k].count;
      out.draws.row(row).head(K) = random::dirichlet(rng, alpha + counts).transpose();
      out.draws.row(row).segment(K, K) = counts.transpose();
      for (Eigen::Index k = 0; k < K; ++k) {
        if constexpr (ppc == 1) {
          base.sample(stats[k], rng, out.draws(row, 2 * K + k));
        } else {
          base.sample(stats[k], rng, out.draws(row, 2 * K + k), out.draws(row, 3 * K + k));
        }
      }
      if (!out.draws.row(row).allFinite()) throw SamplerError("gibbs_mixture: non-finite draw", it);
      ++row;
    }
  }
  out.ess.resize(out.draws.cols());
  for (Eigen::Index j = 0; j < out.draws.cols(); ++j) out.ess(j) = chain_ess(out.draws.col(j));
  return out;
}

template ChainOutput gibbs_mixture<mixture::NormalKnownVariance>(const Eigen::Ref<const Eigen::VectorXd>&,
                                                                 const Eigen::VectorXd&,
                                                                 const mixture::NormalKnownVariance&,
                                                                 const GibbsConfig&);
template ChainOutput gibbs_mixture<mixture::NormalInverseGammaBase>(const Eigen::Ref<const Eigen::VectorXd>&,
                                                                    const Eigen::VectorXd&,
                                                                    const mixture::NormalInverseGammaBase&,
                                                                    const GibbsConfig&);

ChainOutput gibbs_mixture_weights(const Dataset& data, double lambda_ref, int K,
                                  const mixture::NormalKnownVariance& base, const GibbsConfig& cfg) {
  if (!(lambda_ref > 0.0)) throw DomainError("gibbs_mixture_weights: lambda_ref must be positive");
  ChainOutput full = gibbs_mixture(data.y, Eigen::VectorXd::Constant(K, lambda_ref), base, cfg);
  ChainOutput out;
  out.seed = full.seed;
  out.draws = full.draws.leftCols(2 * K);
  out.names.assign(full.names.begin(), full.names.begin() + 2 * K);
  out.ess = full.ess.head(2 * K);
  return out;
}

}  // namespace ebib
