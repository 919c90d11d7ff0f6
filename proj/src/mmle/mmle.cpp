#include "ebib/mmle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "ebib/errors.hpp"
#include "ebib/models/models.hpp"
#include "ebib/optim.hpp"
#include "ebib/samplers.hpp"

namespace ebib {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return a.size() < b.size();
}

std::vector<bool> boundary_flags(const Eigen::VectorXd& x, const std::vector<Interval>& box) {
  std::vector<bool> out(x.size(), false);
  for (Eigen::Index i = 0; i < x.size() && i < static_cast<Eigen::Index>(box.size()); ++i)
    out[i] = x(i) == box[i].lower || x(i) == box[i].upper;
  return out;
}

struct OlsFit {
  Eigen::VectorXd beta;
  double rss;
};

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::VectorXd b = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  return {b, (y - X * b).squaredNorm()};
}

}  // namespace

RestrictedDomain RestrictedDomain::interval(double lower, double upper) {
  RestrictedDomain d;
  d.box = {{lower, upper}};
  return d;
}

RestrictedDomain RestrictedDomain::uniform_box(Eigen::Index dim, double lower, double upper) {
  RestrictedDomain d;
  d.box.assign(dim, Interval{lower, upper});
  return d;
}

RestrictedDomain RestrictedDomain::points(const std::vector<double>& values) {
  RestrictedDomain d;
  if (values.empty()) throw DomainError("RestrictedDomain: empty grid");
  for (double v : values) d.grid.push_back(Eigen::VectorXd::Constant(1, v));
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  d.box = {{*lo, *hi}};
  return d;
}

void RestrictedDomain::validate() const {
  if (box.empty() && grid.empty()) throw DomainError("RestrictedDomain: empty");
  for (const auto& iv : box)
    if (!(iv.upper >= iv.lower)) throw DomainError("RestrictedDomain: interval with upper < lower");
  if (points_per_axis < 1) throw DomainError("RestrictedDomain: points_per_axis must be positive");
}

MmleResult mmle_grid(const ModelFamily& family, const Dataset& data, const RestrictedDomain& domain,
                     const MarginalStrategy& strategy) {
  domain.validate();
  std::vector<Eigen::VectorXd> pts = domain.grid;
  if (pts.empty()) {
    const auto dim = static_cast<Eigen::Index>(domain.box.size());
    const int m = domain.points_per_axis;
    double total = std::pow(static_cast<double>(m), static_cast<double>(dim));
    if (total > 1e6) throw CapacityError("mmle_grid: box discretization exceeds 10^6 points");
    std::vector<int> idx(dim, 0);
    while (true) {
      Eigen::VectorXd x(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        const auto& iv = domain.box[i];
        x(i) = (m == 1) ? iv.lower : iv.lower + (iv.upper - iv.lower) * idx[i] / (m - 1.0);
      }
      pts.push_back(x);
      Eigen::Index k = dim - 1;
      while (k >= 0 && idx[k] == m - 1) idx[k--] = 0;
      if (k < 0) break;
      ++idx[k];
    }
  }
  std::sort(pts.begin(), pts.end(), lex_less);

  MmleResult res;
  res.profile.resize(pts.size());
  res.unreliable.assign(pts.size(), false);
  if (strategy.kind == MarginalKind::Reweighting) {
    if (family.id() != FamilyId::OverfittedMixture) throw CapabilityError("mmle_grid: reweighting is for M7");
    if (!strategy.reference) throw DomainError("mmle_grid: reweighting needs a reference λ");
    const auto& c = family.constants();
    std::vector<double> grid;
    for (const auto& p : pts) grid.push_back(p(0));
    mixture::NormalKnownVariance base{c.component_variance, c.location_prior_mean, c.location_prior_variance};
    const auto prof = mixture_marginal_profile(data, grid, (*strategy.reference)[0], c.K, base, strategy.draws,
                                               strategy.seed, strategy.burnin, strategy.estimator);
    for (std::size_t i = 0; i < prof.size(); ++i) {
      res.profile[i] = prof[i].log_ratio;
      res.unreliable[i] = !prof[i].reliable;
    }
  } else {
    for (std::size_t i = 0; i < pts.size(); ++i)
      res.profile[i] = log_marginal(family, make_hyper(family, pts[i]), data, strategy).value;
  }
  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (res.unreliable[i] || std::isnan(res.profile[i])) continue;
    if (best < 0 || res.profile[i] > res.profile[best]) best = static_cast<std::ptrdiff_t>(i);
  }
  if (best < 0) throw EstimationError("mmle_grid: no reliable grid point");
  res.lambda_hat = make_hyper(family, pts[best]);
  res.objective = res.profile[best];
  res.converged = true;
  res.iterations = static_cast<int>(pts.size());
  if (!domain.box.empty()) {
    res.at_boundary = boundary_flags(pts[best], domain.box);
  } else {
    res.at_boundary.assign(pts[best].size(), false);
    for (Eigen::Index i = 0; i < pts[best].size(); ++i) {
      double lo = pts[0](i), hi = pts[0](i);
      for (const auto& p : pts) {
        lo = std::min(lo, p(i));
        hi = std::max(hi, p(i));
      }
      res.at_boundary[i] = pts[best](i) == lo || pts[best](i) == hi;
    }
  }
  return res;
}

MmleResult mmle_continuous(const ModelFamily& family, const Dataset& data, const RestrictedDomain& domain,
                           double tol, std::uint64_t seed, const MarginalStrategy& strategy) {
  domain.validate();
  if (strategy.kind == MarginalKind::Reweighting) throw CapabilityError("mmle_continuous: needs a deterministic marginal");
  if (!(tol > 0.0)) throw DomainError("mmle_continuous: tol must be positive");
  const auto dim = static_cast<Eigen::Index>(domain.box.size());
  if (dim == 0) throw DomainError("mmle_continuous: box required");
  Eigen::VectorXd lo(dim), hi(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    lo(i) = domain.box[i].lower;
    hi(i) = domain.box[i].upper;
  }
  auto objective = [&](const Eigen::VectorXd& x) {
    return log_marginal(family, make_hyper(family, x), data, strategy).value;
  };
  MmleResult res;
  if ((hi - lo).maxCoeff() == 0.0) {
    res.lambda_hat = make_hyper(family, lo);
    res.objective = objective(lo);
    res.converged = true;
    res.at_boundary.assign(dim, true);
    return res;
  }
  if (dim == 1) {
    auto f = [&](double x) { return objective(Eigen::VectorXd::Constant(1, x)); };
    optim::OptimResult g = optim::golden_section_max(f, lo(0), hi(0), tol);
    // Grid cross-check guards against a non-unimodal profile.
    const int m = 201;
    double gbest = -std::numeric_limits<double>::infinity();
    int ib = 0;
    for (int i = 0; i < m; ++i) {
      const double x = lo(0) + (hi(0) - lo(0)) * i / (m - 1.0);
      const double v = f(x);
      if (v > gbest) {
        gbest = v;
        ib = i;
      }
    }
    if (gbest > g.value + 1e-9 * std::max(1.0, std::abs(gbest))) {
      const double step = (hi(0) - lo(0)) / (m - 1.0);
      const double a = std::max(lo(0), lo(0) + (ib - 1) * step), b = std::min(hi(0), lo(0) + (ib + 1) * step);
      optim::OptimResult g2 = optim::golden_section_max(f, a, b, tol);
      g2.iterations += g.iterations;
      if (g2.value > g.value) g = g2;
    }
    double x = g.x(0);
    if (x - lo(0) <= tol) x = lo(0);
    if (hi(0) - x <= tol) x = hi(0);
    res.lambda_hat = make_hyper(family, Eigen::VectorXd::Constant(1, x));
    res.objective = f(x);
    res.converged = g.converged;
    res.iterations = g.iterations;
    res.at_boundary = {x == lo(0) || x == hi(0)};
    return res;
  }

  Eigen::VectorXd x(dim);
  int iterations = 0;
  bool converged = true;
  const int K = family.constants().K;
  if (family.id() == FamilyId::MarkovDirichlet && dim == K * K) {
    Eigen::VectorXd full = lo;
    for (int i = 0; i < K; ++i) {
      optim::Box box{lo.segment(i * K, K), hi.segment(i * K, K)};
      optim::NelderMeadOptions opt;
      opt.seed = derive_seed(seed, {static_cast<std::uint64_t>(i)});
      auto row_obj = [&](const Eigen::VectorXd& a) {
        Eigen::VectorXd z = full;
        z.segment(i * K, K) = a;
        return objective(z);
      };
      const auto r = optim::nelder_mead_box_max(row_obj, box, opt);
      full.segment(i * K, K) = r.x;
      iterations += r.iterations;
      converged = converged && r.converged;
    }
    x = full;
  } else {
    optim::Box box{lo, hi};
    optim::NelderMeadOptions opt;
    opt.seed = seed;
    const auto r = optim::nelder_mead_box_max(objective, box, opt);
    x = r.x;
    iterations = r.iterations;
    converged = r.converged;
  }
  res.lambda_hat = make_hyper(family, x);
  res.objective = objective(x);
  res.converged = converged;
  res.iterations = iterations;
  res.at_boundary = boundary_flags(x, domain.box);
  return res;
}

MmleResult lasso_mmle_em(const Dataset& data, double init_lambda, const LassoEmConfig& cfg, int em_steps) {
  if (!(init_lambda > 0.0)) throw DomainError("lasso_mmle_em: init λ must be positive");
  if (em_steps < 1) throw DomainError("lasso_mmle_em: need at least one step");
  if (!data.X) throw DomainError("lasso_mmle_em: design matrix required");
  const double d = static_cast<double>(data.X->cols());
  LassoGibbs chain(data, cfg.sigma_mode, cfg.sigma2, cfg.seed);
  GibbsConfig g;
  g.iters = cfg.iters + cfg.burnin;
  g.burnin = cfg.burnin;
  g.thin = cfg.thin;
  g.seed = cfg.seed;
  MmleResult res;
  double lam = init_lambda;
  res.trace.push_back(lam);
  int small = 0;
  for (int t = 0; t < em_steps; ++t) {
    chain.run(lam, g);
    const double next = std::sqrt(2.0 * d / chain.expected_tau2_sum());
    small = (std::abs(next - lam) / lam < 1e-3) ? small + 1 : 0;
    lam = next;
    res.trace.push_back(lam);
    res.iterations = t + 1;
    if (small >= 3) {
      res.converged = true;
      break;
    }
  }
  res.lambda_hat = HyperParam::scalar("lambda", lam);
  res.objective = kNaN;
  res.at_boundary = {false};
  return res;
}

double normal_mean_mmle_closed_form(const Dataset& data, double sigma2) {
  if (data.n == 0) throw InsufficientDataError("normal_mean_mmle_closed_form: no data");
  const double ybar = data.y.mean();
  return std::max(0.0, ybar * ybar - sigma2 / static_cast<double>(data.n));
}

double gprior_mmle_closed_form(const Dataset& data) {
  if (!data.X) throw DomainError("gprior_mmle_closed_form: design matrix required");
  const Eigen::Index n = data.n, p = data.X->cols();
  if (n <= p + 1) throw InsufficientDataError("gprior_mmle_closed_form: need n > d");
  const Eigen::MatrixXd Xc = data.X->rowwise() - data.X->colwise().mean();
  const Eigen::VectorXd yc = data.y.array() - data.y.mean();
  const OlsFit fit = ols(Xc, yc);
  const double sse = fit.rss, ssr = yc.squaredNorm() - sse;
  const double F = (ssr / p) / (sse / static_cast<double>(n - 1 - p));
  return std::max(F - 1.0, 0.0) / static_cast<double>(n);
}

HyperParam pseudo_mmle(const ModelFamily& family, const Dataset& data) {
  const auto& c = family.constants();
  switch (family.id()) {
    case FamilyId::NormalMean: {
      if (data.n == 0) throw InsufficientDataError("pseudo_mmle: no data");
      return oracle_hyperparameter(family, ParamPoint::scalar(data.y.mean()));
    }
    case FamilyId::IndepNormalRegression: {
      if (!data.X) throw DomainError("pseudo_mmle: design matrix required");
      return oracle_hyperparameter(family, ParamPoint::vector(ols(*data.X, data.y).beta));
    }
    case FamilyId::GPriorRegression: {
      if (!data.X) throw DomainError("pseudo_mmle: design matrix required");
      const Eigen::Index n = data.n, p = data.X->cols();
      if (n <= p + 1) throw InsufficientDataError("pseudo_mmle: need n > d");
      const Eigen::MatrixXd Xc = data.X->rowwise() - data.X->colwise().mean();
      const Eigen::VectorXd yc = data.y.array() - data.y.mean();
      const OlsFit fit = ols(Xc, yc);
      const double sigma = std::sqrt(fit.rss / static_cast<double>(n));
      const ModelFamily fam = family.with_gram(Xc.transpose() * Xc / static_cast<double>(n));
      return oracle_hyperparameter(fam, ParamPoint::g_prior(data.y.mean(), fit.beta, sigma));
    }
    case FamilyId::BayesLasso: {
      if (!data.X) throw DomainError("pseudo_mmle: design matrix required");
      const OlsFit fit = ols(*data.X, data.y);
      if (c.lasso_sigma == LassoSigma::Fixed) return oracle_hyperparameter(family, ParamPoint::vector(fit.beta));
      Eigen::VectorXd t(fit.beta.size() + 1);
      t << fit.beta, fit.rss / static_cast<double>(data.n);
      return oracle_hyperparameter(family, ParamPoint::vector(t));
    }
    default: throw CapabilityError("pseudo_mmle: no closed-form MLE for " + std::string(family_code(family.id())));
  }
}

}  // namespace ebib
