#include "ebib/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

#include "ebib/errors.hpp"
#include "ebib/models/models.hpp"
#include "ebib/numerics/gaussian.hpp"
#include "ebib/numerics/special.hpp"
#include "ebib/samplers.hpp"

namespace ebib {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double logdet_spd(const Eigen::MatrixXd& A, const char* who) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw DomainError(std::string(who) + ": matrix not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double m1_closed(const ModelFamily& f, double lam, const Dataset& data) {
  if (!(lam >= 0.0) || std::isinf(lam)) throw DomainError("M1 marginal: λ must be finite and nonnegative");
  return numerics::low_rank_gaussian_logpdf(data.y, Eigen::VectorXd::Zero(data.n), f.constants().sigma2, lam);
}

double m2_closed(const ModelFamily& f, const HyperParam& lambda, const Dataset& data) {
  if (!data.X) throw DomainError("M2 marginal: design matrix required");
  const Eigen::MatrixXd& X = *data.X;
  const double s2 = f.constants().sigma2;
  const Eigen::Index n = data.n;
  if (lambda.size() != X.cols()) throw DomainError("M2 marginal: one variance per coefficient");
  std::vector<Eigen::Index> act;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    if (!(lambda[j] >= 0.0) || std::isinf(lambda[j])) throw DomainError("M2 marginal: variances must be finite, >= 0");
    if (lambda[j] > 0.0) act.push_back(j);
  }
  const double yy = data.y.squaredNorm();
  double out = -0.5 * n * (kLog2Pi + std::log(s2)) - 0.5 * yy / s2;
  const auto k = static_cast<Eigen::Index>(act.size());
  if (k == 0) return out;
  // Σ = σ²I + X_A D X_Aᵀ via Woodbury with M = σ² D⁻¹ + X_AᵀX_A.
  Eigen::MatrixXd Xa(n, k);
  double logtau = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    Xa.col(a) = X.col(act[a]);
    logtau += std::log(lambda[act[a]]);
  }
  Eigen::MatrixXd M = Xa.transpose() * Xa;
  for (Eigen::Index a = 0; a < k; ++a) M(a, a) += s2 / lambda[act[a]];
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  const Eigen::VectorXd xty = Xa.transpose() * data.y;
  const double quad_corr = xty.dot(llt.solve(xty)) / s2;
  const double logdet_extra = logtau - k * std::log(s2) + 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return out + 0.5 * quad_corr - 0.5 * logdet_extra;
}

double m3_closed(const HyperParam& lambda, const Dataset& data) {
  if (!data.X) throw DomainError("M3 marginal: design matrix required");
  const Eigen::MatrixXd& X = *data.X;
  const double g = lambda[0];
  if (!(g >= 0.0) || std::isinf(g)) throw DomainError("M3 marginal: g must be finite and nonnegative");
  const Eigen::Index n = data.n, p = X.cols();
  if (n <= p + 1) throw InsufficientDataError("M3 marginal: need n > d");
  const double nd = static_cast<double>(n);
  const double h = 0.5 * (nd - 1.0);
  const Eigen::VectorXd yc = data.y.array() - data.y.mean();
  if (g == 0.0) {
    // β degenerate at 0: only the intercept and σ² remain.
    return -h * kLog2Pi - 0.5 * std::log(nd) + std::lgamma(h) - h * std::log(0.5 * yc.squaredNorm());
  }
  // Centered design Z = PX, P = I − 11ᵀ/n, S = n g (ZᵀZ)⁻¹, A = ZᵀZ + S⁻¹, b = Zᵀy, Q = yᵀPy − bᵀA⁻¹b.
  const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
  const Eigen::MatrixXd xtx = Xc.transpose() * Xc;
  const Eigen::MatrixXd A = Xc.transpose() * Xc + xtx / (nd * g);
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw DomainError("M3 marginal: design not full rank");
  const Eigen::VectorXd b = Xc.transpose() * yc;
  const double Q = yc.squaredNorm() - b.dot(llt.solve(b));
  if (!(Q > 0.0)) throw DomainError("M3 marginal: degenerate residual");
  // |S A| = |n g (ZᵀZ)⁻¹| |A|.
  const double logdet_SA = p * std::log(nd * g) - logdet_spd(xtx, "M3 marginal") +
                           2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -h * kLog2Pi - 0.5 * std::log(nd) - 0.5 * logdet_SA + std::lgamma(h) - h * std::log(0.5 * Q);
}

double m4_closed(const ModelFamily& f, const HyperParam& lambda, const Dataset& data) {
  if (!data.counts) throw DomainError("M4 marginal: transition counts required");
  const auto& Y = *data.counts;
  const int K = f.constants().K;
  if (Y.rows() != K || lambda.size() != K * K) throw DomainError("M4 marginal: dimension mismatch");
  double out = 0.0;
  for (int i = 0; i < K; ++i) {
    double asum = 0.0;
    long ysum = 0;
    for (int j = 0; j < K; ++j) {
      const double a = lambda[i * K + j];
      if (!(a >= 0.0) || std::isinf(a)) throw DomainError("M4 marginal: α must be finite and nonnegative");
      const int y = Y(i, j);
      ysum += y;
      asum += a;
      if (y == 0) continue;
      if (a == 0.0) return -kInf;
      // α(α+1)...(α+y−1)
      for (int k = 0; k < y; ++k) out += std::log(a + k);
    }
    if (ysum == 0) continue;
    if (asum == 0.0) return -kInf;
    // |α_i|(|α_i|+1)...(|α_i|+y_i·−1)
    for (long k = 0; k < ysum; ++k) out -= std::log(asum + static_cast<double>(k));
  }
  return out;
}

struct LassoOrthogonal {
  double sigma, rss;
  Eigen::VectorXd center, scale, norm;
};

LassoOrthogonal lasso_orthogonal(const ModelFamily& f, const Dataset& data) {
  if (f.constants().lasso_sigma != LassoSigma::Fixed)
    throw CapabilityError("M5 marginal: closed form needs known σ");
  if (!data.X) throw DomainError("M5 marginal: design matrix required");
  const Eigen::MatrixXd& X = *data.X;
  if (!has_orthogonal_columns(X)) throw CapabilityError("M5 marginal: closed form needs orthogonal design columns");
  LassoOrthogonal o;
  o.sigma = std::sqrt(f.constants().sigma2);
  const Eigen::Index d = X.cols();
  o.center.resize(d);
  o.scale.resize(d);
  o.norm.resize(d);
  Eigen::VectorXd fit = Eigen::VectorXd::Zero(data.n);
  for (Eigen::Index j = 0; j < d; ++j) {
    o.norm(j) = X.col(j).norm();
    o.center(j) = X.col(j).dot(data.y) / (o.norm(j) * o.norm(j));
    o.scale(j) = o.sigma / o.norm(j);
    fit += o.center(j) * X.col(j);
  }
  o.rss = (data.y - fit).squaredNorm();
  return o;
}

template <class LogC>
double m5_assemble(const LassoOrthogonal& o, double lam, Eigen::Index n, LogC&& log_c) {
  if (!(lam > 0.0) || std::isinf(lam)) throw DomainError("M5 marginal: λ must be positive and finite");
  const double s2 = o.sigma * o.sigma;
  double out = -0.5 * n * (kLog2Pi + std::log(s2)) - 0.5 * o.rss / s2;
  for (Eigen::Index j = 0; j < o.center.size(); ++j)
    out += std::log(lam / (2.0 * o.sigma)) + 0.5 * kLog2Pi + std::log(o.scale(j)) + log_c(lam / o.sigma, j);
  return out;
}

double laplace_gaussian_quadrature(double r, double c, double s, const numerics::QuadratureSpec& spec) {
  // Integrate exp(−r|b|) N(b; c, s²) around its mode, scaled by the value there.
  const double b0 = c > r * s * s ? c - r * s * s : (c < -r * s * s ? c + r * s * s : 0.0);
  auto logf = [&](double b) { return -r * std::abs(b) + numerics::normal_logpdf(b, c, s * s); };
  const double peak = logf(b0);
  const double lo = b0 - 14.0 * s, hi = b0 + 14.0 * s;
  auto f = [&](double b) { return std::exp(logf(b) - peak); };
  double total;
  if (lo < 0.0 && hi > 0.0)
    total = numerics::integrate(f, lo, 0.0, spec) + numerics::integrate(f, 0.0, hi, spec);
  else
    total = numerics::integrate(f, lo, hi, spec);
  return peak + std::log(total);
}

double m1_quadrature(const ModelFamily& f, double lam, const Dataset& data, const numerics::QuadratureSpec& spec) {
  if (lam == 0.0) return m1_closed(f, lam, data);
  if (!(lam > 0.0) || std::isinf(lam)) throw DomainError("M1 marginal: λ must be finite and nonnegative");
  const double s2 = f.constants().sigma2, n = static_cast<double>(data.n);
  const double ybar = data.n > 0 ? data.y.mean() : 0.0;
  const double m = n * lam * ybar / (n * lam + s2), sd = std::sqrt(lam * s2 / (n * lam + s2));
  const double ss = data.y.squaredNorm();
  auto logf = [&](double t) {
    return -0.5 * n * (kLog2Pi + std::log(s2)) - 0.5 * (ss - 2.0 * t * n * ybar + n * t * t) / s2 +
           numerics::normal_logpdf(t, 0.0, lam);
  };
  const double peak = logf(m);
  const double total = numerics::integrate([&](double u) { return std::exp(logf(m + sd * u) - peak); }, -14.0, 14.0, spec);
  return peak + std::log(sd * total);
}

}  // namespace

double markov_dirichlet_multinomial(const Eigen::MatrixXi& counts, const Eigen::MatrixXd& alpha) {
  if (counts.rows() != alpha.rows() || counts.cols() != alpha.cols())
    throw DomainError("markov_dirichlet_multinomial: dimension mismatch");
  double out = 0.0;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    std::vector<double> a, ay;
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      if (alpha(i, j) > 0.0) {
        a.push_back(alpha(i, j));
        ay.push_back(alpha(i, j) + counts(i, j));
      } else if (counts(i, j) > 0) {
        return -kInf;
      }
    }
    if (a.empty()) {
      if (counts.row(i).sum() > 0) return -kInf;
      continue;
    }
    const Eigen::Map<const Eigen::VectorXd> va(a.data(), a.size()), vay(ay.data(), ay.size());
    out += numerics::log_multivariate_beta(vay) - numerics::log_multivariate_beta(va);
  }
  return out;
}

double mixture_marginal_exact(const Dataset& data, double lambda, int K, const mixture::NormalKnownVariance& base) {
  if (!(lambda > 0.0)) throw DomainError("mixture_marginal_exact: λ must be positive");
  return mixture::enumerate_allocations(data.y, Eigen::VectorXd::Constant(K, lambda), base).log_marginal;
}

std::vector<ProfilePoint> mixture_marginal_profile(const Dataset& data, const std::vector<double>& grid,
                                                   double lambda_ref, int K,
                                                   const mixture::NormalKnownVariance& base, int draws,
                                                   std::uint64_t seed, int burnin, ReweightEstimator estimator) {
  if (!(lambda_ref > 0.0)) throw DomainError("mixture_marginal_profile: λ_ref must be positive");
  for (double l : grid)
    if (!(l > 0.0) || l > 20.0 * lambda_ref || l < lambda_ref / 20.0)
      throw DomainError("mixture_marginal_profile: grid points must lie within a factor 20 of λ_ref");
  GibbsConfig cfg;
  cfg.burnin = burnin;
  cfg.iters = burnin + draws;
  cfg.seed = seed;
  const ChainOutput chain = gibbs_mixture_weights(data, lambda_ref, K, base, cfg);
  const Eigen::Index T = chain.draws.rows();
  const Eigen::VectorXd aref = Eigen::VectorXd::Constant(K, lambda_ref);
  std::vector<ProfilePoint> out;
  out.reserve(grid.size());
  Eigen::VectorXd l(T);
  for (double lam : grid) {
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(K, lam);
    for (Eigen::Index t = 0; t < T; ++t) {
      if (estimator == ReweightEstimator::RaoBlackwell) {
        const Eigen::VectorXd counts = chain.draws.row(t).segment(K, K).transpose();
        l(t) = mixture::log_allocation_prior(counts, a) - mixture::log_allocation_prior(counts, aref);
      } else {
        const Eigen::ArrayXd p = chain.draws.row(t).head(K).transpose().array();
        const double logsum = p.max(1e-300).log().sum();
        l(t) = std::lgamma(K * lam) - K * std::lgamma(lam) - std::lgamma(K * lambda_ref) + K * std::lgamma(lambda_ref) +
               (lam - lambda_ref) * logsum;
      }
    }
    ProfilePoint pt;
    pt.lambda = lam;
    if (lam == lambda_ref) {
      pt.log_ratio = 0.0;
      pt.std_error = 0.0;
      pt.ess = static_cast<double>(T);
    } else {
      const double M = l.maxCoeff();
      const Eigen::VectorXd w = (l.array() - M).exp().matrix();
      const double wbar = w.mean();
      pt.log_ratio = M + std::log(wbar);
      pt.std_error = batch_means_stderr(w) / wbar;
      pt.ess = w.sum() * w.sum() / w.squaredNorm();
    }
    pt.reliable = pt.ess >= 50.0;
    out.push_back(pt);
  }
  return out;
}

MarginalEstimate log_marginal(const ModelFamily& f, const HyperParam& lambda, const Dataset& data,
                              const MarginalStrategy& strategy) {
  MarginalEstimate est;
  const auto& c = f.constants();
  switch (strategy.kind) {
    case MarginalKind::ClosedForm:
      switch (f.id()) {
        case FamilyId::NormalMean: est.value = m1_closed(f, lambda[0], data); return est;
        case FamilyId::IndepNormalRegression: est.value = m2_closed(f, lambda, data); return est;
        case FamilyId::GPriorRegression: est.value = m3_closed(lambda, data); return est;
        case FamilyId::MarkovDirichlet: est.value = m4_closed(f, lambda, data); return est;
        case FamilyId::BayesLasso: {
          const LassoOrthogonal o = lasso_orthogonal(f, data);
          est.value = m5_assemble(o, lambda[0], data.n, [&](double r, Eigen::Index j) {
            return log_laplace_gaussian_normalizer(r, o.center(j), o.scale(j));
          });
          return est;
        }
        default: throw CapabilityError("log_marginal: no closed form for " + std::string(family_code(f.id())));
      }
    case MarginalKind::Quadrature:
      strategy.quadrature.validate();
      if (f.id() == FamilyId::NormalMean) {
        est.value = m1_quadrature(f, lambda[0], data, strategy.quadrature);
        return est;
      }
      if (f.id() == FamilyId::BayesLasso) {
        const LassoOrthogonal o = lasso_orthogonal(f, data);
        est.value = m5_assemble(o, lambda[0], data.n, [&](double r, Eigen::Index j) {
          return laplace_gaussian_quadrature(r, o.center(j), o.scale(j), strategy.quadrature);
        });
        return est;
      }
      throw CapabilityError("log_marginal: quadrature not available for " + std::string(family_code(f.id())));
    case MarginalKind::Enumeration:
      if (f.id() == FamilyId::OverfittedMixture) {
        if (!(lambda[0] > 0.0)) throw DomainError("M7 marginal: λ must be positive");
        mixture::NormalKnownVariance base{c.component_variance, c.location_prior_mean, c.location_prior_variance};
        est.value = mixture_marginal_exact(data, lambda[0], c.K, base);
        return est;
      }
      if (f.id() == FamilyId::GaussMixtureKnownK) {
        if (!(lambda[1] > 0.0 && lambda[2] > 0.0)) throw DomainError("M6 marginal: τ and ψ must be positive");
        mixture::NormalInverseGammaBase base{lambda[0], lambda[1], c.omega, lambda[2]};
        est.value = mixture::enumerate_allocations(data.y, Eigen::VectorXd::Ones(c.K), base).log_marginal;
        return est;
      }
      throw CapabilityError("log_marginal: enumeration is for mixture families");
    case MarginalKind::Reweighting: {
      if (f.id() != FamilyId::OverfittedMixture) throw CapabilityError("log_marginal: reweighting is for M7");
      if (!strategy.reference) throw DomainError("log_marginal: reweighting needs a reference λ");
      mixture::NormalKnownVariance base{c.component_variance, c.location_prior_mean, c.location_prior_variance};
      const auto prof = mixture_marginal_profile(data, {lambda[0]}, (*strategy.reference)[0], c.K, base,
                                                 strategy.draws, strategy.seed, strategy.burnin, strategy.estimator);
      if (!prof[0].reliable) throw ReliabilityError("log_marginal: reweighting ESS below 50", prof[0].ess);
      est.value = prof[0].log_ratio;
      est.std_error = prof[0].std_error;
      est.ess = prof[0].ess;
      est.relative = true;
      return est;
    }
  }
  throw DomainError("log_marginal: unknown strategy");
}

double log_marginal_value(const ModelFamily& family, const HyperParam& lambda, const Dataset& data,
                          const MarginalStrategy& strategy) {
  return log_marginal(family, lambda, data, strategy).value;
}

}  // namespace ebib
