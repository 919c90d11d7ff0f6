#include "ebib/kl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "ebib/errors.hpp"
#include "ebib/marginal.hpp"
#include "ebib/models/models.hpp"
#include "ebib/samplers.hpp"

namespace ebib {

double kl_exact_gaussian(const ModelFamily& f, const ParamPoint& theta0, const HyperParam& lambda, Eigen::Index n) {
  const double s2 = f.constants().sigma2;
  const double nd = static_cast<double>(n);
  if (f.id() == FamilyId::NormalMean) {
    const double lam = lambda[0], t = theta0.values(0);
    if (!(lam >= 0.0) || std::isinf(lam)) throw DomainError("kl_exact_gaussian: λ must be finite and nonnegative");
    // tr(Σ₂⁻¹Σ₁) − n = −nλ/(σ² + nλ); quadratic term nθ₀²/(σ² + nλ); log-det ratio log(1 + nλ/σ²).
    return 0.5 * ((nd * t * t - nd * lam) / (nd * lam + s2) + std::log1p(nd * lam / s2));
  }
  if (f.id() == FamilyId::IndepNormalRegression) {
    if (!f.constants().design) throw DomainError("kl_exact_gaussian: M2 needs a family design");
    const Eigen::MatrixXd& X = *f.constants().design;
    if (X.rows() != n) throw DomainError("kl_exact_gaussian: design rows differ from n");
    const Eigen::VectorXd mu = X * theta0.values;
    std::vector<Eigen::Index> act;
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
      if (!(lambda[j] >= 0.0) || std::isinf(lambda[j])) throw DomainError("kl_exact_gaussian: bad variance");
      if (lambda[j] > 0.0) act.push_back(j);
    }
    const auto k = static_cast<Eigen::Index>(act.size());
    if (k == 0) return 0.5 * mu.squaredNorm() / s2;
    Eigen::MatrixXd Xa(n, k);
    double logtau = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) {
      Xa.col(a) = X.col(act[a]);
      logtau += std::log(lambda[act[a]]);
    }
    const Eigen::MatrixXd xtx = Xa.transpose() * Xa;
    Eigen::MatrixXd M = xtx;
    for (Eigen::Index a = 0; a < k; ++a) M(a, a) += s2 / lambda[act[a]];
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    const double trace_term = -llt.solve(xtx).trace();
    const Eigen::VectorXd xtmu = Xa.transpose() * mu;
    const double quad = (mu.squaredNorm() - xtmu.dot(llt.solve(xtmu))) / s2;
    const double logdet = logtau - k * std::log(s2) + 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return 0.5 * (trace_term + quad + logdet);
  }
  throw CapabilityError("kl_exact_gaussian: Gaussian families only (M1, M2)");
}

KlEstimate kl_monte_carlo(const ModelFamily& f, const ParamPoint& theta0, const HyperParam& lambda, Eigen::Index n,
                          int reps, std::uint64_t seed) {
  if (reps < 1) throw DomainError("kl_monte_carlo: reps must be positive");
  Eigen::VectorXd v(reps);
  for (int r = 0; r < reps; ++r) {
    const Dataset data = simulate(f, theta0, n, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    v(r) = log_likelihood(f, theta0, data) - log_marginal(f, lambda, data).value;
  }
  KlEstimate out;
  out.value = v.mean();
  if (reps == 1) {
    out.std_error = std::numeric_limits<double>::quiet_NaN();
    out.std_error_defined = false;
  } else {
    out.std_error = std::sqrt((v.array() - out.value).square().sum() / (reps - 1) / reps);
  }
  return out;
}

namespace {

void finish_profile(KlProfile& p, const ModelFamily& f, bool stochastic) {
  const auto it = std::min_element(p.values.begin(), p.values.end());
  const auto i = static_cast<std::size_t>(it - p.values.begin());
  p.minimizer = make_hyper(f, Eigen::VectorXd::Constant(1, p.grid[i]));
  p.min_value = *it;
  p.candidates = {p.grid[i]};
  if (!stochastic) return;
  const double upper = p.values[i] + 2.0 * p.std_errors[i];
  p.candidates.clear();
  for (std::size_t j = 0; j < p.values.size(); ++j)
    if (p.values[j] - 2.0 * p.std_errors[j] <= upper) p.candidates.push_back(p.grid[j]);
  p.ambiguous = p.candidates.size() > 1;
}

}  // namespace

KlProfile kl_minimizer(const ModelFamily& f, const ParamPoint& theta0, Eigen::Index n, const std::vector<double>& grid,
                       const KlStrategy& strategy) {
  if (grid.empty()) throw DomainError("kl_minimizer: empty grid");
  KlProfile p;
  p.grid = grid;
  for (double lam : grid) {
    const HyperParam h = make_hyper(f, Eigen::VectorXd::Constant(1, lam));
    if (strategy.exact) {
      p.values.push_back(kl_exact_gaussian(f, theta0, h, n));
      p.std_errors.push_back(0.0);
    } else {
      const KlEstimate e = kl_monte_carlo(f, theta0, h, n, strategy.reps, strategy.seed);
      p.values.push_back(e.value);
      p.std_errors.push_back(e.std_error_defined ? e.std_error : 0.0);
    }
  }
  finish_profile(p, f, !strategy.exact);
  return p;
}

KlProfile kl_relative_mixture(const ModelFamily& f, const ParamPoint& theta0, Eigen::Index n,
                              const std::vector<double>& grid, double lambda_ref, int reps, int draws,
                              std::uint64_t seed) {
  if (f.id() != FamilyId::OverfittedMixture) throw CapabilityError("kl_relative_mixture: M7 only");
  if (reps < 2) throw DomainError("kl_relative_mixture: need reps >= 2");
  const auto& c = f.constants();
  mixture::NormalKnownVariance base{c.component_variance, c.location_prior_mean, c.location_prior_variance};
  Eigen::MatrixXd vals(reps, grid.size());
  for (int r = 0; r < reps; ++r) {
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(r)});
    const Dataset data = simulate(f, theta0, n, s);
    const auto prof = mixture_marginal_profile(data, grid, lambda_ref, c.K, base, draws, derive_seed(s, {stream::chain}));
    for (std::size_t j = 0; j < grid.size(); ++j) vals(r, j) = -prof[j].log_ratio;
  }
  KlProfile p;
  p.grid = grid;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double m = vals.col(j).mean();
    p.values.push_back(m);
    p.std_errors.push_back(std::sqrt((vals.col(j).array() - m).square().sum() / (reps - 1) / reps));
  }
  finish_profile(p, f, true);
  return p;
}

std::string kl_profile_csv(const KlProfile& p) {
  std::ostringstream os;
  os.precision(17);
  os << "lambda,kl,stderr\n";
  for (std::size_t i = 0; i < p.grid.size(); ++i) os << p.grid[i] << ',' << p.values[i] << ',' << p.std_errors[i] << '\n';
  return os.str();
}

}  // namespace ebib
