#include "ebib/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ebib/errors.hpp"
#include "ebib/numerics/quadrature.hpp"
#include "ebib/numerics/special.hpp"

namespace ebib {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ln(Φ(a) − Φ(b)) for a > b, using the tail that keeps both terms small.
double log_phi_diff(double a, double b) {
  if (!(a > b)) return -kInf;
  if (b > 0.0) {
    const double la = numerics::log_normal_cdf(-b), lb = numerics::log_normal_cdf(-a);
    return la + std::log1p(-std::exp(lb - la));
  }
  const double la = numerics::log_normal_cdf(a), lb = numerics::log_normal_cdf(b);
  return la + std::log1p(-std::exp(lb - la));
}

double lg_logpdf(double rate, double c, double s, double x) {
  return -rate * std::abs(x) + numerics::normal_logpdf(x, c, s * s) - log_laplace_gaussian_normalizer(rate, c, s);
}

double lg_cdf(double rate, double c, double s, double x) {
  const double logz = log_laplace_gaussian_normalizer(rate, c, s);
  const double shift = 0.5 * rate * rate * s * s;
  // Mass on (−inf, min(x,0)]: e^{rc + r²s²/2} Φ((t − c − r s²)/s).
  const double t = std::min(x, 0.0);
  double out = std::exp(rate * c + shift + numerics::log_normal_cdf((t - c - rate * s * s) / s) - logz);
  if (x > 0.0) {
    const double hi = (x - c + rate * s * s) / s;
    const double lo = (-c + rate * s * s) / s;
    out += std::exp(-rate * c + shift + log_phi_diff(hi, lo) - logz);
  }
  return std::clamp(out, 0.0, 1.0);
}

std::pair<double, double> lg_window(double rate, double c, double s) {
  return {std::min(c, 0.0) - 12.0 * s, std::max(c, 0.0) + 12.0 * s + (rate > 0 ? 0.0 : 0.0)};
}

double lg_moment(double rate, double c, double s, int k) {
  auto [lo, hi] = lg_window(rate, c, s);
  numerics::QuadratureSpec spec;
  spec.abs_tol = 1e-11 * std::max(1.0, std::pow(std::max(std::abs(lo), std::abs(hi)), k));
  return numerics::integrate([&](double x) { return std::pow(x, k) * std::exp(lg_logpdf(rate, c, s, x)); }, lo, hi,
                             spec);
}

double grid_density(const GridDensity& g, double x) {
  const auto& xs = g.x;
  if (xs.size() == 0 || x < xs(0) || x > xs(xs.size() - 1)) return 0.0;
  const auto* begin = xs.data();
  const auto* end = xs.data() + xs.size();
  auto it = std::upper_bound(begin, end, x);
  Eigen::Index i = std::max<Eigen::Index>(1, std::min<Eigen::Index>(it - begin, xs.size() - 1));
  const double x0 = xs(i - 1), x1 = xs(i);
  const double w = (x1 > x0) ? (x - x0) / (x1 - x0) : 0.0;
  return (1.0 - w) * g.density(i - 1) + w * g.density(i);
}

Eigen::VectorXd grid_cumulative(const GridDensity& g) {
  Eigen::VectorXd c(g.x.size());
  c(0) = 0.0;
  for (Eigen::Index i = 1; i < g.x.size(); ++i)
    c(i) = c(i - 1) + 0.5 * (g.density(i) + g.density(i - 1)) * (g.x(i) - g.x(i - 1));
  return c;
}

GridDensity student_t_grid(double loc, double scale2, double dof) {
  const double sd = std::sqrt(scale2 * (dof > 2.0 ? dof / (dof - 2.0) : 1.0));
  GridDensity g;
  const int m = 4001;
  g.x = Eigen::VectorXd::LinSpaced(m, loc - 14.0 * sd, loc + 14.0 * sd);
  g.density.resize(m);
  const double lognorm = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                         0.5 * std::log(dof * std::numbers::pi * scale2);
  for (int i = 0; i < m; ++i) {
    const double z = (g.x(i) - loc);
    g.density(i) = std::exp(lognorm - 0.5 * (dof + 1.0) * std::log1p(z * z / (dof * scale2)));
  }
  return g;
}

GridDensity inverse_gamma_grid(double shape, double rate) {
  const double mean = shape > 1 ? rate / (shape - 1.0) : rate;
  const double sd = shape > 2 ? mean / std::sqrt(shape - 2.0) : mean;
  GridDensity g;
  const int m = 4001;
  g.x = Eigen::VectorXd::LinSpaced(m, std::max(1e-12, mean - 14.0 * sd), mean + 20.0 * sd);
  g.density.resize(m);
  for (int i = 0; i < m; ++i) {
    const double v = g.x(i);
    g.density(i) = std::exp(shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(v) - rate / v);
  }
  return g;
}

Eigen::VectorXd normalized_weights(const WeightedSamples& s) {
  if (s.weights.size() == 0) return Eigen::VectorXd::Constant(s.draws.rows(), 1.0 / s.draws.rows());
  return s.weights / s.weights.sum();
}

}  // namespace

double log_laplace_gaussian_normalizer(double rate, double center, double scale) {
  if (!(scale > 0.0)) throw DomainError("laplace-gaussian: scale must be positive");
  if (rate == 0.0) return 0.0;
  const double shift = 0.5 * rate * rate * scale * scale;
  const double pos = -rate * center + shift + numerics::log_normal_cdf(center / scale - rate * scale);
  const double neg = rate * center + shift + numerics::log_normal_cdf(-center / scale - rate * scale);
  return numerics::log_sum_exp(pos, neg);
}

Eigen::Index dimension(const PosteriorRep& rep) {
  return std::visit(overloaded{[](const ClosedGaussian& g) { return g.mean.size(); },
                               [](const NormalInverseGamma& g) { return g.beta_mean.size() + 2; },
                               [](const LaplaceGaussianProduct& g) { return g.center.size(); },
                               [](const GridDensity&) { return Eigen::Index{1}; },
                               [](const WeightedSamples& s) { return s.draws.cols(); }},
                    rep);
}

PosteriorRep marginal(const PosteriorRep& rep, Eigen::Index j) {
  if (j < 0 || j >= dimension(rep)) throw DomainError("marginal: coordinate out of range");
  return std::visit(
      overloaded{
          [j](const ClosedGaussian& g) -> PosteriorRep {
            return ClosedGaussian{Eigen::VectorXd::Constant(1, g.mean(j)), Eigen::MatrixXd::Constant(1, 1, g.cov(j, j))};
          },
          [j](const NormalInverseGamma& g) -> PosteriorRep {
            const double dof = 2.0 * g.shape;
            const double s2 = g.rate / g.shape;
            const Eigen::Index p = g.beta_mean.size();
            if (j == 0) return student_t_grid(g.alpha_mean, s2 / g.n, dof);
            if (j <= p) return student_t_grid(g.beta_mean(j - 1), s2 * g.beta_scale(j - 1, j - 1), dof);
            return inverse_gamma_grid(g.shape, g.rate);
          },
          [j](const LaplaceGaussianProduct& g) -> PosteriorRep {
            return LaplaceGaussianProduct{g.rate, Eigen::VectorXd::Constant(1, g.center(j)),
                                          Eigen::VectorXd::Constant(1, g.scale(j))};
          },
          [](const GridDensity& g) -> PosteriorRep { return g; },
          [j](const WeightedSamples& s) -> PosteriorRep {
            return WeightedSamples{s.draws.col(j), s.weights, s.seed};
          }},
      rep);
}

double log_density(const PosteriorRep& rep, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != dimension(rep)) throw DomainError("log_density: dimension mismatch");
  return std::visit(
      overloaded{
          [&](const ClosedGaussian& g) {
            // Point-mass coordinates contribute nothing when matched exactly and −inf otherwise.
            std::vector<Eigen::Index> active;
            for (Eigen::Index i = 0; i < g.mean.size(); ++i) {
              if (g.cov(i, i) > 0.0)
                active.push_back(i);
              else if (x(i) != g.mean(i))
                return -kInf;
            }
            const auto k = static_cast<Eigen::Index>(active.size());
            if (k == 0) return 0.0;
            Eigen::VectorXd r(k);
            Eigen::MatrixXd c(k, k);
            for (Eigen::Index a = 0; a < k; ++a) {
              r(a) = x(active[a]) - g.mean(active[a]);
              for (Eigen::Index b = 0; b < k; ++b) c(a, b) = g.cov(active[a], active[b]);
            }
            Eigen::LLT<Eigen::MatrixXd> llt(c);
            if (llt.info() != Eigen::Success) throw DomainError("log_density: covariance not SPD");
            const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
            const Eigen::VectorXd z = llt.matrixL().solve(r);
            return -0.5 * (k * std::log(2.0 * std::numbers::pi) + logdet + z.squaredNorm());
          },
          [&](const NormalInverseGamma& g) {
            const double s2 = x(x.size() - 1);
            if (!(s2 > 0.0)) return -kInf;
            const Eigen::Index p = g.beta_mean.size();
            double out = numerics::normal_logpdf(x(0), g.alpha_mean, s2 / g.n);
            Eigen::LLT<Eigen::MatrixXd> llt(s2 * g.beta_scale);
            const Eigen::VectorXd z = llt.matrixL().solve(x.segment(1, p) - g.beta_mean);
            out += -0.5 * (p * std::log(2.0 * std::numbers::pi) + 2.0 * llt.matrixLLT().diagonal().array().log().sum() +
                           z.squaredNorm());
            out += g.shape * std::log(g.rate) - std::lgamma(g.shape) - (g.shape + 1.0) * std::log(s2) - g.rate / s2;
            return out;
          },
          [&](const LaplaceGaussianProduct& g) {
            double out = 0.0;
            for (Eigen::Index j = 0; j < g.center.size(); ++j) out += lg_logpdf(g.rate, g.center(j), g.scale(j), x(j));
            return out;
          },
          [&](const GridDensity& g) { return std::log(grid_density(g, x(0))); },
          [](const WeightedSamples&) -> double {
            throw CapabilityError("log_density: sample representations carry no density");
          }},
      rep);
}

double density_1d(const PosteriorRep& rep, double x) {
  if (dimension(rep) != 1) throw DomainError("density_1d: representation is not one-dimensional");
  if (const auto* g = std::get_if<GridDensity>(&rep)) return grid_density(*g, x);
  return std::exp(log_density(rep, Eigen::VectorXd::Constant(1, x)));
}

double mean_1d(const PosteriorRep& rep) {
  if (dimension(rep) != 1) throw DomainError("mean_1d: representation is not one-dimensional");
  return std::visit(overloaded{[](const ClosedGaussian& g) { return g.mean(0); },
                               [](const NormalInverseGamma&) -> double { throw DomainError("unreachable"); },
                               [](const LaplaceGaussianProduct& g) { return lg_moment(g.rate, g.center(0), g.scale(0), 1); },
                               [](const GridDensity& g) {
                                 Eigen::VectorXd xd = g.x.array() * g.density.array();
                                 GridDensity tmp{g.x, xd};
                                 const double mass = grid_cumulative(g)(g.x.size() - 1);
                                 return grid_cumulative(tmp)(g.x.size() - 1) / mass;
                               },
                               [](const WeightedSamples& s) { return normalized_weights(s).dot(s.draws.col(0)); }},
                    rep);
}

double sd_1d(const PosteriorRep& rep) {
  if (dimension(rep) != 1) throw DomainError("sd_1d: representation is not one-dimensional");
  return std::visit(overloaded{[](const ClosedGaussian& g) { return std::sqrt(g.cov(0, 0)); },
                               [](const NormalInverseGamma&) -> double { throw DomainError("unreachable"); },
                               [](const LaplaceGaussianProduct& g) {
                                 const double m = lg_moment(g.rate, g.center(0), g.scale(0), 1);
                                 const double m2 = lg_moment(g.rate, g.center(0), g.scale(0), 2);
                                 return std::sqrt(std::max(0.0, m2 - m * m));
                               },
                               [&](const GridDensity& g) {
                                 const double m = mean_1d(rep);
                                 Eigen::VectorXd xd = (g.x.array() - m).square() * g.density.array();
                                 GridDensity tmp{g.x, xd};
                                 const double mass = grid_cumulative(g)(g.x.size() - 1);
                                 return std::sqrt(grid_cumulative(tmp)(g.x.size() - 1) / mass);
                               },
                               [](const WeightedSamples& s) {
                                 const Eigen::VectorXd w = normalized_weights(s);
                                 const double m = w.dot(s.draws.col(0));
                                 return std::sqrt(w.dot((s.draws.col(0).array() - m).square().matrix()));
                               }},
                    rep);
}

double cdf_1d(const PosteriorRep& rep, double x) {
  if (dimension(rep) != 1) throw DomainError("cdf_1d: representation is not one-dimensional");
  return std::visit(overloaded{[x](const ClosedGaussian& g) {
                                 const double v = g.cov(0, 0);
                                 if (v <= 0.0) return x >= g.mean(0) ? 1.0 : 0.0;
                                 return numerics::normal_cdf((x - g.mean(0)) / std::sqrt(v));
                               },
                               [](const NormalInverseGamma&) -> double { throw DomainError("unreachable"); },
                               [x](const LaplaceGaussianProduct& g) { return lg_cdf(g.rate, g.center(0), g.scale(0), x); },
                               [x](const GridDensity& g) {
                                 const Eigen::VectorXd c = grid_cumulative(g);
                                 const double total = c(c.size() - 1);
                                 if (x <= g.x(0)) return 0.0;
                                 if (x >= g.x(g.x.size() - 1)) return 1.0;
                                 auto it = std::upper_bound(g.x.data(), g.x.data() + g.x.size(), x);
                                 const Eigen::Index i = it - g.x.data();
                                 const double fx = grid_density(g, x);
                                 return (c(i - 1) + 0.5 * (g.density(i - 1) + fx) * (x - g.x(i - 1))) / total;
                               },
                               [x](const WeightedSamples& s) {
                                 const Eigen::VectorXd w = normalized_weights(s);
                                 double acc = 0.0;
                                 for (Eigen::Index i = 0; i < s.draws.rows(); ++i)
                                   if (s.draws(i, 0) <= x) acc += w(i);
                                 return acc;
                               }},
                    rep);
}

double quantile_1d(const PosteriorRep& rep, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile_1d: p must lie in (0, 1)");
  if (const auto* g = std::get_if<ClosedGaussian>(&rep)) {
    return g->mean(0) + std::sqrt(std::max(0.0, g->cov(0, 0))) * numerics::normal_quantile(p);
  }
  if (const auto* s = std::get_if<WeightedSamples>(&rep)) {
    const Eigen::VectorXd w = normalized_weights(*s);
    std::vector<Eigen::Index> order(s->draws.rows());
    for (Eigen::Index i = 0; i < s->draws.rows(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s->draws(a, 0) < s->draws(b, 0); });
    double acc = 0.0;
    for (auto i : order) {
      acc += w(i);
      if (acc >= p) return s->draws(i, 0);
    }
    return s->draws(order.back(), 0);
  }
  // Bracketed bisection on the CDF.
  const double m = mean_1d(rep), sd = sd_1d(rep);
  double lo = m - 20.0 * sd, hi = m + 20.0 * sd;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(m)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf_1d(rep, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double effective_sample_size(const PosteriorRep& rep) {
  if (const auto* s = std::get_if<WeightedSamples>(&rep)) {
    if (s->weights.size() == 0) return static_cast<double>(s->draws.rows());
    const double sw = s->weights.sum();
    return sw * sw / s->weights.squaredNorm();
  }
  return kInf;
}

Eigen::MatrixXd sample(const PosteriorRep& rep, Eigen::Index count, Engine& rng) {
  const Eigen::Index d = dimension(rep);
  Eigen::MatrixXd out(count, d);
  std::visit(overloaded{
                 [&](const ClosedGaussian& g) {
                   // Eigen-decomposition handles semidefinite covariances (point-mass coordinates).
                   Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.cov);
                   const Eigen::MatrixXd root =
                       eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
                   for (Eigen::Index r = 0; r < count; ++r) {
                     Eigen::VectorXd z(d);
                     for (Eigen::Index i = 0; i < d; ++i) z(i) = random::standard_normal(rng);
                     out.row(r) = (g.mean + root * z).transpose();
                   }
                 },
                 [&](const NormalInverseGamma& g) {
                   const Eigen::Index p = g.beta_mean.size();
                   Eigen::LLT<Eigen::MatrixXd> llt(g.beta_scale);
                   const Eigen::MatrixXd L = llt.matrixL();
                   for (Eigen::Index r = 0; r < count; ++r) {
                     const double s2 = random::inverse_gamma(rng, g.shape, g.rate);
                     out(r, 0) = g.alpha_mean + std::sqrt(s2 / g.n) * random::standard_normal(rng);
                     Eigen::VectorXd z(p);
                     for (Eigen::Index i = 0; i < p; ++i) z(i) = random::standard_normal(rng);
                     out.row(r).segment(1, p) = (g.beta_mean + std::sqrt(s2) * (L * z)).transpose();
                     out(r, p + 1) = s2;
                   }
                 },
                 [&](const LaplaceGaussianProduct& g) {
                   // Exact two-piece sampler: pick the half-line by its mass, then a truncated normal by inversion.
                   for (Eigen::Index j = 0; j < d; ++j) {
                     const double c = g.center(j), s = g.scale(j), r = g.rate;
                     const double p_neg = lg_cdf(r, c, s, 0.0);
                     for (Eigen::Index k = 0; k < count; ++k) {
                       const double u = random::uniform(rng);
                       const double v = std::clamp(random::uniform(rng), 1e-300, 1.0 - 1e-16);
                       if (u < p_neg) {
                         const double mu = c + r * s * s;  // N(mu, s²) truncated to (−inf, 0]
                         const double top = numerics::normal_cdf(-mu / s);
                         out(k, j) = mu + s * numerics::normal_quantile(std::clamp(v * top, 1e-300, 1.0 - 1e-16));
                       } else {
                         const double mu = c - r * s * s;  // N(mu, s²) truncated to [0, inf)
                         const double bottom = numerics::normal_cdf(-mu / s);
                         out(k, j) = mu + s * numerics::normal_quantile(
                                                  std::clamp(bottom + v * (1.0 - bottom), 1e-300, 1.0 - 1e-16));
                       }
                     }
                   }
                 },
                 [&](const GridDensity& g) {
                   for (Eigen::Index k = 0; k < count; ++k) out(k, 0) = quantile_1d(g, random::uniform(rng) * 0.999999 + 5e-7);
                 },
                 [&](const WeightedSamples& s) {
                   const Eigen::VectorXd w = normalized_weights(s);
                   for (Eigen::Index k = 0; k < count; ++k)
                     out.row(k) = s.draws.row(random::categorical_from_log(rng, w.array().log().matrix()));
                 }},
             rep);
  return out;
}

}  // namespace ebib
