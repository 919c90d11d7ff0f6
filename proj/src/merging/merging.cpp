#include "ebib/merging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>

#include "ebib/errors.hpp"
#include "ebib/models/models.hpp"
#include "ebib/numerics/gaussian.hpp"
#include "ebib/numerics/special.hpp"

namespace ebib {
namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

double quad_form_inverse(const Eigen::MatrixXd& I, const Eigen::VectorXd& d) {
  Eigen::LLT<Eigen::MatrixXd> llt(I);
  if (llt.info() != Eigen::Success) throw DomainError("merging: Fisher information not positive definite");
  return d.dot(llt.solve(d));
}

std::pair<double, double> window_1d(const PosteriorRep& p, double k) {
  const double m = mean_1d(p), s = sd_1d(p);
  return {m - k * s, m + k * s};
}

bool has_density(const PosteriorRep& r) { return !std::holds_alternative<WeightedSamples>(r); }

double l1_quadrature_1d(const PosteriorRep& p, const PosteriorRep& q, const L1Options& o) {
  auto [a1, b1] = window_1d(p, o.window_sd);
  auto [a2, b2] = window_1d(q, o.window_sd);
  const double a = std::min(a1, a2), b = std::max(b1, b2);
  auto f = [&](double x) { return std::abs(density_1d(p, x) - density_1d(q, x)); };
  // Split at 0 (Laplace kink) and at both means so the crossing regions are resolved.
  std::vector<double> cuts{a, b, mean_1d(p), mean_1d(q)};
  if (a < 0.0 && b > 0.0) cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i] >= a && cuts[i + 1] <= b && cuts[i + 1] > cuts[i]) total += numerics::integrate(f, cuts[i], cuts[i + 1], o.quadrature);
  // Mass outside the window counts fully toward the distance bound.
  const double outside = (cdf_1d(p, a) + 1.0 - cdf_1d(p, b)) + (cdf_1d(q, a) + 1.0 - cdf_1d(q, b));
  return std::clamp(total + outside, 0.0, 2.0);
}

double l1_samples_vs_density(const WeightedSamples& s, const PosteriorRep& q) {
  const double ess = effective_sample_size(s);
  if (ess < 100.0) throw ReliabilityError("l1_distance: sample ESS below 100", ess);
  const Eigen::VectorXd w = s.weights.size() ? Eigen::VectorXd(s.weights / s.weights.sum())
                                              : Eigen::VectorXd::Constant(s.draws.rows(), 1.0 / s.draws.rows());
  const double lo = quantile_1d(q, 1e-4), hi = quantile_1d(q, 1.0 - 1e-4);
  const int bins = std::clamp(static_cast<int>(std::sqrt(ess) / 5.0), 10, 200);
  const double h = (hi - lo) / bins;
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(bins);
  double below = 0.0, above = 0.0;
  for (Eigen::Index i = 0; i < s.draws.rows(); ++i) {
    const double x = s.draws(i, 0);
    if (x < lo) {
      below += w(i);
    } else if (x >= hi) {
      above += w(i);
    } else {
      mass(std::min(bins - 1, static_cast<int>((x - lo) / h))) += w(i);
    }
  }
  // Compared on the bin partition: the pointwise step-density L1 carries a smoothing bias of
  // about h·∫|q'|/4 that does not vanish with more draws.
  double total = std::abs(below - cdf_1d(q, lo)) + std::abs(above - (1.0 - cdf_1d(q, hi)));
  double prev = cdf_1d(q, lo);
  for (int b = 0; b < bins; ++b) {
    const double next = b + 1 == bins ? cdf_1d(q, hi) : cdf_1d(q, lo + (b + 1) * h);
    total += std::abs(mass(b) - (next - prev));
    prev = next;
  }
  return std::clamp(total, 0.0, 2.0);
}

double l1_quadrature_2d(const PosteriorRep& p, const PosteriorRep& q, const L1Options& o) {
  std::array<std::pair<double, double>, 2> win;
  for (Eigen::Index j = 0; j < 2; ++j) {
    auto [a1, b1] = window_1d(marginal(p, j), o.window_sd);
    auto [a2, b2] = window_1d(marginal(q, j), o.window_sd);
    win[j] = {std::min(a1, a2), std::max(b1, b2)};
  }
  numerics::QuadratureSpec inner = o.quadrature;
  inner.abs_tol = std::max(1e-10, o.quadrature.abs_tol);
  Eigen::VectorXd x(2);
  auto outer = [&](double x0) {
    return numerics::integrate(
        [&](double x1) {
          x(0) = x0;
          x(1) = x1;
          return std::abs(std::exp(log_density(p, x)) - std::exp(log_density(q, x)));
        },
        win[1].first, win[1].second, inner);
  };
  numerics::QuadratureSpec os = o.quadrature;
  os.abs_tol = std::max(1e-8, o.quadrature.abs_tol * 10.0);
  return std::clamp(numerics::integrate(outer, win[0].first, win[0].second, os), 0.0, 2.0);
}

double l1_importance(const PosteriorRep& p, const PosteriorRep& q, const L1Options& o) {
  Engine rng(derive_seed(o.seed, {stream::monte_carlo}));
  const Eigen::Index half = o.mc_draws / 2;
  const Eigen::MatrixXd xp = sample(p, half, rng), xq = sample(q, o.mc_draws - half, rng);
  double acc = 0.0;
  auto term = [&](const Eigen::VectorXd& x) {
    const double lp = log_density(p, x), lq = log_density(q, x);
    const double mx = std::max(lp, lq);
    const double a = std::exp(lp - mx), b = std::exp(lq - mx);
    return 2.0 * std::abs(a - b) / (a + b);
  };
  for (Eigen::Index i = 0; i < xp.rows(); ++i) acc += term(xp.row(i).transpose());
  for (Eigen::Index i = 0; i < xq.rows(); ++i) acc += term(xq.row(i).transpose());
  return std::clamp(acc / o.mc_draws, 0.0, 2.0);
}

}  // namespace

Eigen::VectorXd delta_theta0(const ModelFamily& f, const ParamPoint& theta0, const HyperParam& l1,
                             const HyperParam& l2) {
  return prior_gradient(f, theta0, l1) - prior_gradient(f, theta0, l2);
}

double predicted_l1_from(const Eigen::VectorXd& delta, const Eigen::MatrixXd& fisher, Eigen::Index n) {
  if (n < 1) throw DomainError("predicted_l1: n must be positive");
  if (delta.isZero(0.0)) return 0.0;
  return kSqrt2OverPi * std::sqrt(quad_form_inverse(fisher, delta) / static_cast<double>(n));
}

double predicted_l1_posterior(const ModelFamily& f, const ParamPoint& theta0, const HyperParam& l1,
                              const HyperParam& l2, Eigen::Index n) {
  if (f.id() == FamilyId::BayesLasso)
    throw NonDifferentiableError("predicted_l1_posterior: joint prediction disabled for the LASSO family");
  return predicted_l1_from(delta_theta0(f, theta0, l1, l2), fisher_information(f, theta0), n);
}

double gprior_delta_quadratic(const Eigen::VectorXd& beta0, const Eigen::MatrixXd& V, double sigma0, double g1,
                              double g2) {
  const double c = 1.0 / g1 - 1.0 / g2;
  const double q = beta0.dot(V * beta0) / (sigma0 * sigma0);
  return c * c * q * (1.0 + 0.5 * q);
}

double l1_distance(const PosteriorRep& p, const PosteriorRep& q, const L1Options& o) {
  const Eigen::Index d = dimension(p);
  if (dimension(q) != d) throw DomainError("l1_distance: dimension mismatch");
  if (d == 1) {
    const auto* gp = std::get_if<ClosedGaussian>(&p);
    const auto* gq = std::get_if<ClosedGaussian>(&q);
    if (gp && gq) {
      const double v1 = gp->cov(0, 0), v2 = gq->cov(0, 0);
      if (v1 <= 0.0 || v2 <= 0.0) {
        if (v1 <= 0.0 && v2 <= 0.0) return gp->mean(0) == gq->mean(0) ? 0.0 : 2.0;
        return 2.0;
      }
      return numerics::gaussian_l1_1d(gp->mean(0), v1, gq->mean(0), v2);
    }
    if (has_density(p) && has_density(q)) return l1_quadrature_1d(p, q, o);
    if (!has_density(p) && has_density(q)) return l1_samples_vs_density(std::get<WeightedSamples>(p), q);
    if (has_density(p) && !has_density(q)) return l1_samples_vs_density(std::get<WeightedSamples>(q), p);
    throw CapabilityError("l1_distance: two sample sets carry no density");
  }
  if (!has_density(p) || !has_density(q)) throw CapabilityError("l1_distance: multivariate samples need densities");
  if (d == 2) return l1_quadrature_2d(p, q, o);
  return l1_importance(p, q, o);
}

double predicted_l1_predictive(const ModelFamily& f, const ParamPoint& theta0, const HyperParam& l1,
                               const HyperParam& l2, Eigen::Index n, const PredictiveOptions& o) {
  if (n < 1) throw DomainError("predicted_l1_predictive: n must be positive");
  const Eigen::VectorXd delta = delta_theta0(f, theta0, l1, l2);
  if (delta.isZero(0.0)) return 0.0;
  const Eigen::MatrixXd I = fisher_information(f, theta0);
  const Eigen::VectorXd v = Eigen::LLT<Eigen::MatrixXd>(I).solve(delta);
  const auto& t = theta0.values;
  const double nd = static_cast<double>(n);
  switch (f.id()) {
    case FamilyId::NormalMean: {
      const double s2 = f.constants().sigma2, s = std::sqrt(s2), th = t(0);
      const double integral = numerics::integrate(
          [&](double y) {
            const double r = y - th;
            return std::abs(v(0) * std::exp(numerics::normal_logpdf(y, th, s2)) * r / s2);
          },
          th - 14.0 * s, th + 14.0 * s, o.quadrature);
      return integral / nd;
    }
    case FamilyId::GaussMixtureKnownK: {
      const int K = f.constants().K;
      const Eigen::VectorXd w = complete_simplex(t.head(K - 1));
      const Eigen::VectorXd mu = t.segment(K - 1, K), var = t.segment(2 * K - 1, K);
      auto g = [&](double y) {
        double acc = 0.0;
        Eigen::VectorXd phi(K);
        for (int k = 0; k < K; ++k) phi(k) = std::exp(numerics::normal_logpdf(y, mu(k), var(k)));
        for (int k = 0; k < K - 1; ++k) acc += v(k) * (phi(k) - phi(K - 1));
        for (int k = 0; k < K; ++k) {
          const double r = y - mu(k);
          acc += v(K - 1 + k) * w(k) * phi(k) * r / var(k);
          acc += v(2 * K - 1 + k) * w(k) * phi(k) * (r * r / (2.0 * var(k) * var(k)) - 0.5 / var(k));
        }
        return std::abs(acc);
      };
      const double sd = std::sqrt(var.maxCoeff());
      return numerics::integrate(g, mu.minCoeff() - 14.0 * sd, mu.maxCoeff() + 14.0 * sd, o.quadrature) / nd;
    }
    case FamilyId::GPriorRegression: {
      const Eigen::Index p = t.size() - 2;
      const double alpha = t(0), sigma = t(p + 1), s2 = sigma * sigma;
      const Eigen::VectorXd beta = t.segment(1, p);
      const Eigen::MatrixXd& V = *f.constants().gram;
      const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(V).matrixL();
      Engine rng(derive_seed(o.seed, {stream::design}));
      double acc = 0.0;
      for (int r = 0; r < o.design_draws; ++r) {
        Eigen::VectorXd z(p);
        for (Eigen::Index j = 0; j < p; ++j) z(j) = random::standard_normal(rng);
        const Eigen::VectorXd x = L * z;
        const double m = alpha + x.dot(beta);
        const double vb = v.segment(1, p).dot(x);
        acc += numerics::integrate(
            [&](double y) {
              const double res = y - m;
              const double dens = std::exp(numerics::normal_logpdf(y, m, s2));
              return std::abs(dens * ((v(0) + vb) * res / s2 + v(p + 1) * (res * res / (s2 * sigma) - 1.0 / sigma)));
            },
            m - 14.0 * sigma, m + 14.0 * sigma, o.quadrature);
      }
      return acc / o.design_draws / nd;
    }
    default:
      throw CapabilityError("predicted_l1_predictive: not available for " + std::string(family_code(f.id())));
  }
}

PosteriorRep predictive(const ModelFamily& f, const HyperParam& lambda, const Dataset& data) {
  if (f.id() != FamilyId::NormalMean) throw CapabilityError("predictive: closed form for M1 only");
  const auto post = std::get<ClosedGaussian>(posterior(f, lambda, data));
  ClosedGaussian out = post;
  out.cov(0, 0) += f.constants().sigma2;
  return out;
}

double credible_discrepancy(const ModelFamily& f, const Dataset& data, const HyperParam& lb, const HyperParam& le,
                            double alpha, Eigen::Index coordinate) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("credible_discrepancy: α must lie in (0, 1)");
  const PosteriorRep build = marginal(posterior(f, lb, data), coordinate);
  const PosteriorRep eval = marginal(posterior(f, le, data), coordinate);
  const double lo = quantile_1d(build, 0.5 * alpha), hi = quantile_1d(build, 1.0 - 0.5 * alpha);
  return (cdf_1d(eval, hi) - cdf_1d(eval, lo)) - (1.0 - alpha);
}

std::string merging_csv(const std::vector<MergingReport>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "n,seed,lambda1,lambda2,l1_exact,l1_pred,cred_disc\n";
  for (const auto& r : rows) {
    os << r.n << ',' << r.seed << ',' << r.lambda1[0] << ',' << r.lambda2[0] << ',' << r.l1_exact << ','
       << r.l1_predicted << ',';
    if (r.credible_discrepancy) os << *r.credible_discrepancy;
    os << '\n';
  }
  return os.str();
}

}  // namespace ebib
