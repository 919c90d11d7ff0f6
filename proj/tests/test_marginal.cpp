#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ebib/errors.hpp"
#include "ebib/marginal.hpp"
#include "ebib/models/models.hpp"
#include "ebib/numerics/gaussian.hpp"
#include "ebib/numerics/quadrature.hpp"
#include "ebib/numerics/special.hpp"

using namespace ebib;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

MarginalStrategy kind(MarginalKind k) {
  MarginalStrategy s;
  s.kind = k;
  return s;
}

Eigen::VectorXd normal_sample(Eigen::Index n, double mean, double sd, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(mean, sd);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = z(gen);
  return y;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("trivial marginal values") {
  const auto m1 = ModelFamily::normal_mean(1.0);
  CHECK(std::abs(log_marginal_value(m1, HyperParam::scalar("lambda", 0.0), Dataset::observations(vec({0.0}))) +
                 0.9189385332) < 1e-10);

  const auto m4 = ModelFamily::markov_dirichlet(3);
  Eigen::VectorXd a(9);
  a << 0.5, 1.0, 2.0, 3.0, 0.0, 1.0, 4.0, 0.2, 0.7;
  CHECK(log_marginal_value(m4, make_hyper(m4, a), Dataset::transition_counts(Eigen::MatrixXi::Zero(3, 3))) == 0.0);
}

TEST_CASE("M1 closed form against direct quadrature of likelihood times prior") {
  const auto m1 = ModelFamily::normal_mean(1.3);
  const auto data = Dataset::observations(normal_sample(12, 1.5, 1.1, 4));
  for (double lam : {0.3, 2.0, 9.0}) {
    const auto h = HyperParam::scalar("lambda", lam);
    const double closed = log_marginal_value(m1, h, data);
    const double shift = -closed;
    const double z = numerics::integrate(
        [&](double t) {
          return std::exp(log_likelihood(m1, ParamPoint::scalar(t), data) + log_prior(m1, ParamPoint::scalar(t), h) +
                          shift);
        },
        -15.0, 15.0);
    CHECK(std::abs(std::log(z)) < 1e-8);
    CHECK(std::abs(log_marginal_value(m1, h, data, kind(MarginalKind::Quadrature)) - closed) < 1e-7);
  }
}

TEST_CASE("M1 marginal with n = 2 integrates to one over y") {
  const auto m1 = ModelFamily::normal_mean(1.0);
  numerics::QuadratureSpec inner;
  inner.abs_tol = 1e-10;
  for (double lam : {0.5, 1.0, 4.0}) {
    const auto h = HyperParam::scalar("lambda", lam);
    const double r = 12.0 * std::sqrt(1.0 + lam);
    const double mass = numerics::integrate(
        [&](double y1) {
          return numerics::integrate(
              [&](double y2) { return std::exp(log_marginal_value(m1, h, Dataset::observations(vec({y1, y2})))); },
              -r, r, inner);
        },
        -r, r);
    CHECK(std::abs(mass - 1.0) < 1e-6);
  }
}

TEST_CASE("M2 marginal equals the dense Gaussian") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd X(15, 3);
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j < 3; ++j) X(i, j) = z(gen);
  const Eigen::VectorXd y = normal_sample(15, 0.0, 2.0, 12);
  const auto m2 = ModelFamily::indep_normal_regression(0.7);
  for (const Eigen::VectorXd& tau : {vec({1.0, 2.0, 0.5}), vec({0.0, 3.0, 0.0})}) {
    const Eigen::MatrixXd cov = 0.7 * Eigen::MatrixXd::Identity(15, 15) + X * tau.asDiagonal() * X.transpose();
    const double dense = numerics::dense_gaussian_logpdf<double>(y, Eigen::VectorXd::Zero(15), cov);
    CHECK(std::abs(log_marginal_value(m2, make_hyper(m2, tau), Dataset::regression(X, y)) - dense) < 1e-10);
  }
}

TEST_CASE("M3 marginal ratios follow the Zellner Bayes factor") {
  const Eigen::Index n = 40, p = 3;
  std::mt19937_64 gen(13);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = z(gen);
  X.rowwise() -= X.colwise().mean();
  Eigen::VectorXd y = 1.0 + (X * vec({0.3, -0.2, 0.0})).array();
  y += normal_sample(n, 0.0, 1.0, 14);
  const auto data = Dataset::regression(X, y);
  const auto m3 = ModelFamily::g_prior_regression();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::VectorXd fit = X * (X.transpose() * X).ldlt().solve(X.transpose() * yc);
  const double r2 = fit.squaredNorm() / yc.squaredNorm();
  const double base = log_marginal_value(m3, HyperParam::scalar("g", 0.0), data);
  for (double g : {0.01, 0.2, 1.0, 10.0}) {
    const double gz = n * g;
    const double log_bf = 0.5 * (n - 1 - p) * std::log1p(gz) - 0.5 * (n - 1) * std::log1p(gz * (1.0 - r2));
    CHECK(std::abs(log_marginal_value(m3, HyperParam::scalar("g", g), data) - base - log_bf) < 1e-9);
  }
  CHECK(std::abs(log_marginal_value(m3, HyperParam::scalar("g", 1e-13), data) - base) < 1e-9);
  CHECK_THROWS_AS(log_marginal_value(m3, HyperParam::scalar("g", 1.0), Dataset::regression(X.topRows(4), y.head(4))),
                  InsufficientDataError);
}

TEST_CASE("M4 display equals the Dirichlet-multinomial form") {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> cnt(0, 40);
  std::uniform_real_distribution<double> al(0.01, 20.0);
  const auto m4 = ModelFamily::markov_dirichlet(3);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::MatrixXi Y(3, 3);
    Eigen::MatrixXd A(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        A(i, j) = al(gen);
        Y(i, j) = cnt(gen);
      }
    // structural zeros: α = 0 where the count is 0
    Y(0, 2) = 0;
    A(0, 2) = 0.0;
    Y(2, 1) = 0;
    A(2, 1) = 0.0;
    Eigen::VectorXd a(9);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i * 3 + j) = A(i, j);
    const double display = log_marginal_value(m4, make_hyper(m4, a), Dataset::transition_counts(Y));
    // ∏_i B(α_i + y_i)/B(α_i) written out with lgamma
    double dm = 0.0;
    for (int i = 0; i < 3; ++i) {
      double sa = 0.0, sy = 0.0;
      for (int j = 0; j < 3; ++j) {
        if (A(i, j) == 0.0) continue;
        dm += std::lgamma(A(i, j) + Y(i, j)) - std::lgamma(A(i, j));
        sa += A(i, j);
        sy += Y(i, j);
      }
      dm += std::lgamma(sa) - std::lgamma(sa + sy);
    }
    CHECK(std::abs(display - dm) < 1e-10);
    CHECK(std::abs(markov_dirichlet_multinomial(Y, A) - dm) < 1e-10);
  }
}

TEST_CASE("M5 closed marginal against direct quadrature") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(8, 2);
  for (int i = 0; i < 8; ++i) X(i, i % 2) = (i % 4 < 2) ? 1.5 : -1.5;
  Eigen::VectorXd y(8);
  y << 1.1, -0.2, -0.9, 0.3, 1.4, 0.1, -1.3, -0.4;
  const auto data = Dataset::regression(X, y);
  const auto m5 = ModelFamily::bayes_lasso(LassoSigma::Fixed, 0.8);
  numerics::QuadratureSpec inner;
  inner.abs_tol = 1e-11;
  for (double lam : {0.5, 2.0, 6.0}) {
    const auto h = HyperParam::scalar("lambda", lam);
    const double closed = log_marginal_value(m5, h, data);
    const double mass = numerics::integrate(
        [&](double b1) {
          return numerics::integrate(
              [&](double b2) {
                const auto t = ParamPoint::vector(vec({b1, b2}));
                return std::exp(log_likelihood(m5, t, data) + log_prior(m5, t, h) - closed);
              },
              -6.0, 6.0, inner);
        },
        -6.0, 6.0);
    CHECK(std::abs(std::log(mass)) < 1e-7);
    CHECK(std::abs(log_marginal_value(m5, h, data, kind(MarginalKind::Quadrature)) - closed) < 1e-7);
  }
  CHECK_THROWS_AS(log_marginal_value(ModelFamily::bayes_lasso(LassoSigma::Jeffreys), HyperParam::scalar("lambda", 1.0),
                                     data),
                  CapabilityError);
}

TEST_CASE("M7 enumeration matches three-dimensional quadrature") {
  // Dir(1, 1) weights are uniform; the integrand is a cubic in p, so Simpson's rule on [0, 1] is exact,
  // and the Gaussian location integrals use a 64×64 Gauss-Hermite product rule.
  const Eigen::VectorXd y = vec({-0.4, 1.3, 2.1});
  const auto m7 = ModelFamily::overfitted_mixture(2, 1.0, 0.0, 1.0);
  const double enumerated =
      log_marginal_value(m7, HyperParam::scalar("lambda", 1.0), Dataset::observations(y), kind(MarginalKind::Enumeration));
  const auto& gh = numerics::gauss_hermite_rule(64);
  auto lik = [&](double p) {
    double total = 0.0;
    for (Eigen::Index a = 0; a < gh.nodes.size(); ++a)
      for (Eigen::Index b = 0; b < gh.nodes.size(); ++b) {
        const double g1 = std::sqrt(2.0) * gh.nodes(a), g2 = std::sqrt(2.0) * gh.nodes(b);
        double prod = 1.0;
        for (Eigen::Index i = 0; i < y.size(); ++i)
          prod *= p * numerics::normal_pdf(y(i) - g1) + (1.0 - p) * numerics::normal_pdf(y(i) - g2);
        total += gh.weights(a) * gh.weights(b) * prod;
      }
    return total / std::numbers::pi;
  };
  const double simpson = (lik(0.0) + 4.0 * lik(0.5) + lik(1.0)) / 6.0;
  CHECK(std::abs(enumerated - std::log(simpson)) < 1e-4);
  CHECK(std::abs(enumerated - std::log(simpson)) < 1e-10);
}

TEST_CASE("M6 enumeration with one observation is the Student-t predictive") {
  const auto m6 = ModelFamily::gauss_mixture(2, 3.0);
  const double xi = 0.4, tau = 0.7, psi = 1.8, omega = 3.0, y = 1.9;
  const double dof = omega, scale2 = psi * (tau + 1.0) / (omega * tau);
  const double t = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                   0.5 * std::log(dof * std::numbers::pi * scale2) -
                   0.5 * (dof + 1.0) * std::log1p((y - xi) * (y - xi) / (dof * scale2));
  const double enumerated = log_marginal_value(m6, make_hyper(m6, vec({xi, tau, psi})), Dataset::observations(vec({y})),
                                               kind(MarginalKind::Enumeration));
  CHECK(std::abs(enumerated - t) < 1e-12);
}

TEST_CASE("exchangeable marginals are permutation invariant") {
  const Eigen::VectorXd y = vec({0.3, -1.2, 2.4, 0.8, -0.1, 1.7});
  Eigen::VectorXd perm(6);
  perm << y(3), y(0), y(5), y(1), y(4), y(2);
  const auto a = Dataset::observations(y), b = Dataset::observations(perm);
  const auto m1 = ModelFamily::normal_mean(1.0);
  CHECK(std::abs(log_marginal_value(m1, HyperParam::scalar("lambda", 2.0), a) -
                 log_marginal_value(m1, HyperParam::scalar("lambda", 2.0), b)) < 1e-12);
  const auto m6 = ModelFamily::gauss_mixture(2, 2.0);
  const auto h6 = make_hyper(m6, vec({0.0, 1.0, 2.0}));
  CHECK(std::abs(log_marginal_value(m6, h6, a, kind(MarginalKind::Enumeration)) -
                 log_marginal_value(m6, h6, b, kind(MarginalKind::Enumeration))) < 1e-11);
  const auto m7 = ModelFamily::overfitted_mixture(3, 1.0, 0.0, 1.0);
  const auto h7 = HyperParam::scalar("lambda", 0.4);
  CHECK(std::abs(log_marginal_value(m7, h7, a, kind(MarginalKind::Enumeration)) -
                 log_marginal_value(m7, h7, b, kind(MarginalKind::Enumeration))) < 1e-11);
}

TEST_CASE("mixture marginal symmetry and capacity") {
  const mixture::NormalKnownVariance base{1.0, 0.0, 1.0};
  for (double a : {0.5, 1.7}) {
    const auto d1 = Dataset::observations(vec({-a, a}));
    const auto d2 = Dataset::observations(vec({a, -a}));
    CHECK(std::abs(mixture_marginal_exact(d1, 1.0, 2, base) - mixture_marginal_exact(d2, 1.0, 2, base)) < 1e-13);
  }
  const Eigen::VectorXd y = vec({0.2, -0.7, 1.9, 0.4, -1.1});
  CHECK(std::abs(mixture_marginal_exact(Dataset::observations(y), 0.8, 2, base) -
                 mixture_marginal_exact(Dataset::observations(-y), 0.8, 2, base)) < 1e-12);
  // n = 1: the weights integrate out.
  const double single = mixture_marginal_exact(Dataset::observations(vec({0.9})), 0.3, 2, base);
  CHECK(std::abs(single - numerics::normal_logpdf(0.9, 0.0, 2.0)) < 1e-13);
  CHECK_THROWS_AS(mixture_marginal_exact(Dataset::observations(Eigen::VectorXd::Zero(21)), 1.0, 2, base),
                  CapacityError);
}

TEST_CASE("reweighting agrees with enumeration at n = 8") {
  const mixture::NormalKnownVariance base{1.0, 0.0, 1.0};
  const auto data = Dataset::observations(normal_sample(8, 0.3, 1.0, 21));
  const double ref = 1.0;
  const std::vector<double> grid{0.25, 0.5, 1.0, 2.0};
  const auto prof = mixture_marginal_profile(data, grid, ref, 2, base, 40000, 99);
  const double exact_ref = mixture_marginal_exact(data, ref, 2, base);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double exact = mixture_marginal_exact(data, grid[k], 2, base) - exact_ref;
    CHECK(prof[k].reliable);
    if (grid[k] == ref) {
      CHECK(prof[k].log_ratio == 0.0);
    } else {
      CHECK(std::abs(prof[k].log_ratio - exact) <= 3.0 * prof[k].std_error);
    }
  }
  const auto single = mixture_marginal_profile(data, {0.5}, 0.5, 2, base, 2000, 3);
  CHECK(single[0].log_ratio == 0.0);
  CHECK_THROWS_AS(mixture_marginal_profile(data, {0.01}, 0.5, 2, base, 2000, 3), DomainError);

  MarginalStrategy s;
  s.kind = MarginalKind::Reweighting;
  s.reference = HyperParam::scalar("lambda", 1.0);
  s.draws = 40000;
  s.seed = 5;
  const auto m7 = ModelFamily::overfitted_mixture(2, 1.0, 0.0, 1.0);
  const auto est = log_marginal(m7, HyperParam::scalar("lambda", 0.5), data, s);
  CHECK(est.relative);
  CHECK(std::abs(est.value - (mixture_marginal_exact(data, 0.5, 2, base) - exact_ref)) <= 3.0 * est.std_error);
}

TEST_CASE("reweighting standard error shrinks with more draws") {
  const mixture::NormalKnownVariance base{1.0, 0.0, 1.0};
  const auto data = Dataset::observations(normal_sample(30, 0.0, 1.0, 8));
  std::vector<double> ratios;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto small = mixture_marginal_profile(data, {0.25}, 0.5, 2, base, 4000, seed);
    const auto large = mixture_marginal_profile(data, {0.25}, 0.5, 2, base, 12000, seed + 100);
    ratios.push_back(small[0].std_error / large[0].std_error);
  }
  CHECK(median(ratios) >= 1.5);
}

TEST_CASE("strategy mismatches are capability errors") {
  const auto m1 = ModelFamily::normal_mean(1.0);
  const auto data = Dataset::observations(vec({0.1, 0.2}));
  CHECK_THROWS_AS(log_marginal(m1, HyperParam::scalar("lambda", 1.0), data, kind(MarginalKind::Enumeration)),
                  CapabilityError);
  CHECK_THROWS_AS(log_marginal(m1, HyperParam::scalar("lambda", 1.0), data, kind(MarginalKind::Reweighting)),
                  CapabilityError);
  const auto m7 = ModelFamily::overfitted_mixture(2, 1.0, 0.0, 1.0);
  CHECK_THROWS_AS(log_marginal(m7, HyperParam::scalar("lambda", 1.0), data, kind(MarginalKind::ClosedForm)),
                  CapabilityError);
  CHECK_THROWS_AS(log_marginal(ModelFamily::markov_dirichlet(2), HyperParam::named({"a", "b", "c", "d"}, Eigen::VectorXd::Ones(4)),
                               Dataset::transition_counts(Eigen::MatrixXi::Ones(2, 2)), kind(MarginalKind::Quadrature)),
                  CapabilityError);
}
