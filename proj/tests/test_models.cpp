#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <tuple>

#include <Eigen/LU>

#include "ebib/errors.hpp"
#include "ebib/io.hpp"
#include "ebib/models/models.hpp"
#include "ebib/numerics/finite_diff.hpp"
#include "ebib/numerics/gaussian.hpp"
#include "ebib/numerics/quadrature.hpp"
#include "ebib/numerics/special.hpp"
#include "ebib/samplers.hpp"

using namespace ebib;

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

Eigen::MatrixXd centered_normal_design(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = z(gen);
  X.rowwise() -= X.colwise().mean();
  return X;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Relative-or-absolute agreement used by the gradient checks.
bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

void check_gradient(const ModelFamily& f, const ParamPoint& theta, const HyperParam& lambda, double tol = 1e-6) {
  const Eigen::VectorXd g = prior_gradient(f, theta, lambda);
  const Eigen::VectorXd fd = numerics::finite_diff_gradient(
      [&](const Eigen::VectorXd& x) { return log_prior(f, ParamPoint::vector(x), lambda); }, theta.values, 1e-5);
  REQUIRE(g.size() == fd.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(close(g(i), fd(i), tol));
}

}  // namespace

TEST_CASE("log_likelihood examples") {
  const auto m1 = ModelFamily::normal_mean(1.0);
  CHECK(std::abs(log_likelihood(m1, ParamPoint::scalar(0.0), Dataset::observations(vec({0.0}))) + 0.9189385332) <
        1e-10);

  const auto m4 = ModelFamily::markov_dirichlet(3);
  Eigen::MatrixXd P(3, 3);
  P << 0.2, 0.3, 0.5, 0.1, 0.8, 0.1, 0.6, 0.0, 0.4;
  CHECK(log_likelihood(m4, ParamPoint::transition_matrix(P), Dataset::transition_counts(Eigen::MatrixXi::Zero(3, 3))) ==
        0.0);

  const auto m7 = ModelFamily::overfitted_mixture(2, 1.0, 0.0, 1.0);
  const auto theta = ParamPoint::location_mixture(vec({0.5, 0.5}), vec({-1.0, 1.0}));
  CHECK(std::abs(log_likelihood(m7, theta, Dataset::observations(vec({0.0}))) -
                 std::log(0.5 * phi(1.0) + 0.5 * phi(-1.0))) < 1e-13);
}

TEST_CASE("log_likelihood of regression families matches direct sums") {
  const Eigen::MatrixXd X = centered_normal_design(12, 3, 4);
  const Eigen::VectorXd beta = vec({1.0, -0.5, 2.0});
  Eigen::VectorXd y = X * beta;
  y(0) += 0.7;
  y(5) -= 1.1;
  const auto data = Dataset::regression(X, y);
  auto direct = [&](double alpha, const Eigen::VectorXd& b, double s2) {
    double out = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) out += numerics::normal_logpdf(y(i), alpha + X.row(i).dot(b), s2);
    return out;
  };
  CHECK(std::abs(log_likelihood(ModelFamily::indep_normal_regression(2.0), ParamPoint::vector(beta), data) -
                 direct(0.0, beta, 2.0)) < 1e-11);
  CHECK(std::abs(log_likelihood(ModelFamily::g_prior_regression(), ParamPoint::g_prior(0.3, beta, 1.5), data) -
                 direct(0.3, beta, 2.25)) < 1e-11);
  Eigen::VectorXd bs(4);
  bs << beta, 0.8;
  CHECK(std::abs(log_likelihood(ModelFamily::bayes_lasso(LassoSigma::Jeffreys), ParamPoint::vector(bs), data) -
                 direct(0.0, beta, 0.8)) < 1e-11);
}

TEST_CASE("log_prior examples") {
  const auto m1 = ModelFamily::normal_mean(1.0);
  CHECK(std::abs(log_prior(m1, ParamPoint::scalar(0.0), HyperParam::scalar("lambda", 1.0)) + 0.9189385332) < 1e-10);

  const auto m5 = ModelFamily::bayes_lasso(LassoSigma::Fixed, 1.0);
  CHECK(std::abs(log_prior(m5, ParamPoint::scalar(0.0), HyperParam::scalar("lambda", 2.0))) < 1e-15);

  const auto m6 = ModelFamily::gauss_mixture(2, 2.0);
  const auto theta = ParamPoint::gaussian_mixture(vec({0.3, 0.7}), vec({-1.2, 0.9}), vec({0.8, 1.7}));
  const double xi = 0.1, tau = 1.3, psi = 2.4, omega = 2.0;
  double oracle = std::log(1.0);  // Dir(1, 1) density = Γ(2) = 1
  const double mu[2] = {-1.2, 0.9}, v[2] = {0.8, 1.7};
  for (int k = 0; k < 2; ++k) {
    const double var = v[k] / tau;
    oracle += -0.5 * std::log(2.0 * std::numbers::pi * var) - (mu[k] - xi) * (mu[k] - xi) / (2.0 * var);
    const double a = omega / 2.0, b = psi / 2.0;
    oracle += a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(v[k]) - b / v[k];
  }
  CHECK(std::abs(log_prior(m6, theta, make_hyper(m6, vec({xi, tau, psi}))) - oracle) < 1e-12);
}

TEST_CASE("log_prior rejects boundary hyperparameters") {
  const auto m1 = ModelFamily::normal_mean(1.0);
  CHECK_THROWS_AS(log_prior(m1, ParamPoint::scalar(1.0), HyperParam::scalar("lambda", 0.0)), DomainError);
  CHECK_THROWS_AS(log_prior(m1, ParamPoint::scalar(1.0), HyperParam::scalar("lambda", -2.0)), DomainError);
  const auto m7 = ModelFamily::overfitted_mixture(2, 1.0, 0.0, 1.0);
  CHECK_THROWS_AS(log_prior(m7, ParamPoint::location_mixture(vec({0.5, 0.5}), vec({0.0, 1.0})),
                            HyperParam::scalar("lambda", 0.0)),
                  DomainError);
}

TEST_CASE("prior_gradient examples") {
  const auto m1 = ModelFamily::normal_mean(1.0);
  CHECK(std::abs(prior_gradient(m1, ParamPoint::scalar(2.0), HyperParam::scalar("lambda", 4.0))(0) + 0.5) < 1e-15);
  for (double lam : {0.1, 1.0, 50.0})
    CHECK(prior_gradient(m1, ParamPoint::scalar(0.0), HyperParam::scalar("lambda", lam))(0) == 0.0);

  const auto m5 = ModelFamily::bayes_lasso(LassoSigma::Fixed, 1.0);
  const Eigen::VectorXd g = prior_gradient(m5, ParamPoint::vector(vec({1.0, -3.0})), HyperParam::scalar("lambda", 2.0));
  CHECK(std::abs(g(0) + 2.0) < 1e-15);
  CHECK(std::abs(g(1) - 2.0) < 1e-15);
  CHECK_THROWS_AS(prior_gradient(m5, ParamPoint::vector(vec({1.0, 0.0})), HyperParam::scalar("lambda", 2.0)),
                  NonDifferentiableError);
}

TEST_CASE("prior_gradient matches finite differences for every family") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto U = [&](double lo, double hi) { return lo + (hi - lo) * u(gen); };
  for (int trial = 0; trial < 20; ++trial) {
    const auto m1 = ModelFamily::normal_mean(U(0.5, 2.0));
    check_gradient(m1, ParamPoint::scalar(U(-3, 3)), HyperParam::scalar("lambda", U(0.2, 5)));

    const auto m2 = ModelFamily::indep_normal_regression(1.0);
    check_gradient(m2, ParamPoint::vector(vec({U(-2, 2), U(-2, 2), U(-2, 2)})),
                   make_hyper(m2, vec({U(0.2, 4), U(0.2, 4), U(0.2, 4)})));

    Eigen::MatrixXd V(2, 2);
    const double r = U(-0.5, 0.5);
    V << 1.0, r, r, U(1.0, 2.0);
    const auto m3 = ModelFamily::g_prior_regression().with_gram(V);
    check_gradient(m3, ParamPoint::g_prior(U(-1, 1), vec({U(-2, 2), U(-2, 2)}), U(0.5, 2)),
                   HyperParam::scalar("g", U(0.2, 5)));

    const auto m5f = ModelFamily::bayes_lasso(LassoSigma::Fixed, U(0.5, 2.0));
    check_gradient(m5f, ParamPoint::vector(vec({U(0.1, 2), -U(0.1, 2), U(0.1, 2)})),
                   HyperParam::scalar("lambda", U(0.2, 5)));
    const auto m5j = ModelFamily::bayes_lasso(LassoSigma::Jeffreys);
    check_gradient(m5j, ParamPoint::vector(vec({U(0.1, 2), -U(0.1, 2), U(0.3, 2)})),
                   HyperParam::scalar("lambda", U(0.2, 5)));

    const auto m6 = ModelFamily::gauss_mixture(3, 2.0);
    const double w1 = U(0.1, 0.4), w2 = U(0.1, 0.4);
    check_gradient(m6,
                   ParamPoint::gaussian_mixture(vec({w1, w2, 1.0 - w1 - w2}), vec({U(-2, 2), U(-2, 2), U(-2, 2)}),
                                                vec({U(0.5, 2), U(0.5, 2), U(0.5, 2)})),
                   make_hyper(m6, vec({U(-1, 1), U(0.3, 2), U(0.5, 3)})));

    const auto m7 = ModelFamily::overfitted_mixture(3, 1.0, U(-1, 1), U(0.5, 2));
    check_gradient(m7, ParamPoint::location_mixture(vec({w1, w2, 1.0 - w1 - w2}), vec({U(-2, 2), U(-2, 2), U(-2, 2)})),
                   HyperParam::scalar("lambda", U(0.2, 3)));
  }
}

TEST_CASE("M4 prior gradient along simplex-preserving directions") {
  // Rows must stay on the simplex, so compare directional derivatives along e_ij − e_ik.
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const auto m4 = ModelFamily::markov_dirichlet(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd P(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) P(i, j) = u(gen);
      P.row(i) /= P.row(i).sum();
    }
    Eigen::VectorXd a(9);
    for (int k = 0; k < 9; ++k) a(k) = 0.5 + 3.0 * u(gen);
    const auto lambda = make_hyper(m4, a);
    const auto theta = ParamPoint::transition_matrix(P);
    const Eigen::VectorXd g = prior_gradient(m4, theta, lambda);
    for (int i = 0; i < 3; ++i) {
      const int j = i * 3, k = i * 3 + 2;
      const double h = 1e-6;
      ParamPoint plus = theta, minus = theta;
      plus.values(j) += h;
      plus.values(k) -= h;
      minus.values(j) -= h;
      minus.values(k) += h;
      const double fd = (log_prior(m4, plus, lambda) - log_prior(m4, minus, lambda)) / (2.0 * h);
      CHECK(close(g(j) - g(k), fd, 1e-6));
    }
  }
}

TEST_CASE("oracle hyperparameter values") {
  CHECK(oracle_hyperparameter(ModelFamily::normal_mean(1.0), ParamPoint::scalar(2.0))[0] == 4.0);

  const auto m2 = ModelFamily::indep_normal_regression(1.0);
  const auto tau = oracle_hyperparameter(m2, ParamPoint::vector(vec({0.0, 1.5, 0.0, -2.0})));
  CHECK(tau[0] == 0.0);
  CHECK(tau[2] == 0.0);
  CHECK(std::abs(tau[1] - 2.25) < 1e-15);
  CHECK(std::abs(tau[3] - 4.0) < 1e-15);

  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(15);
  beta0.tail(4) << 0.5, -2.0, 1.0, 3.0;
  const auto m5 = ModelFamily::bayes_lasso(LassoSigma::Fixed, 1.0);
  const double lam5 = oracle_hyperparameter(m5, ParamPoint::vector(beta0))[0];
  CHECK(std::abs(lam5 - 15.0 / 6.5) < 1e-14);
  CHECK(std::abs(lam5 - 2.3077) < 5e-5);
  CHECK_THROWS_AS(oracle_hyperparameter(m5, ParamPoint::vector(Eigen::VectorXd::Zero(3))), DegenerateOracleError);

  const auto m6 = ModelFamily::gauss_mixture(2, 2.0);
  const auto h6 = oracle_hyperparameter(m6, ParamPoint::gaussian_mixture(vec({0.5, 0.5}), vec({-1, 1}), vec({1, 1})));
  CHECK(std::abs(h6[0]) < 1e-15);
  CHECK(std::abs(h6[1] - 1.0) < 1e-14);
  CHECK(std::abs(h6[2] - 2.0) < 1e-14);
  CHECK_THROWS_AS(
      oracle_hyperparameter(m6, ParamPoint::gaussian_mixture(vec({0.5, 0.5}), vec({0.7, 0.7}), vec({1, 2}))),
      DegenerateOracleError);

  const auto m7 = ModelFamily::overfitted_mixture(2, 1.0, 0.0, 1.0);
  CHECK(oracle_hyperparameter(m7, ParamPoint::location_mixture(vec({0.5, 0.5}), vec({0, 0})))[0] == 0.0);
}

TEST_CASE("g-prior oracle matches a direct quadratic form") {
  const Eigen::MatrixXd X = centered_normal_design(40, 3, 8);
  const Eigen::MatrixXd V = X.transpose() * X / 40.0;
  const Eigen::VectorXd beta = vec({0.5, -1.0, 2.0});
  const double sigma = 1.3;
  const auto m3 = ModelFamily::g_prior_regression().with_gram(V);
  double quad = 0.0;
  for (int i = 0; i < 40; ++i) quad += std::pow(X.row(i).dot(beta), 2);
  const double expected = quad / (40.0 * sigma * sigma * 3.0);
  CHECK(std::abs(oracle_hyperparameter(m3, ParamPoint::g_prior(0.0, beta, sigma))[0] - expected) < 1e-12);
}

TEST_CASE("closed-form oracles maximize the prior on a surrounding grid") {
  auto check_argmax = [](const ModelFamily& f, const ParamPoint& theta, Eigen::Index coord) {
    const HyperParam star = oracle_hyperparameter(f, theta);
    const double best = log_prior(f, theta, star);
    for (int i = 0; i < 100; ++i) {
      HyperParam h = star;
      const double factor = std::exp(-2.0 + 4.0 * i / 99.0);
      if (f.id() == FamilyId::GaussMixtureKnownK && coord == 0)
        h.values(0) = star[0] + (-2.0 + 4.0 * i / 99.0);
      else
        h.values(coord) = star[coord] * factor;
      CHECK(best >= log_prior(f, theta, h) - 1e-12);
    }
  };
  check_argmax(ModelFamily::normal_mean(1.0), ParamPoint::scalar(2.0), 0);
  const auto m2 = ModelFamily::indep_normal_regression(1.0);
  check_argmax(m2, ParamPoint::vector(vec({1.0, -0.4})), 0);
  check_argmax(m2, ParamPoint::vector(vec({1.0, -0.4})), 1);
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(2, 2);
  V(0, 1) = V(1, 0) = 0.3;
  check_argmax(ModelFamily::g_prior_regression().with_gram(V), ParamPoint::g_prior(0.2, vec({1.0, 2.0}), 1.1), 0);
  check_argmax(ModelFamily::bayes_lasso(LassoSigma::Fixed, 1.0), ParamPoint::vector(vec({0.5, -2.0, 1.0})), 0);
  const auto m6 = ModelFamily::gauss_mixture(3, 2.0);
  const auto t6 = ParamPoint::gaussian_mixture(vec({0.2, 0.3, 0.5}), vec({-1.0, 0.5, 2.0}), vec({0.5, 1.0, 2.0}));
  for (Eigen::Index c = 0; c < 3; ++c) check_argmax(m6, t6, c);
}

TEST_CASE("M4 reduced Dirichlet log-density is concave along segments") {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd p(3);
  p << 0.2, 0.5, 0.3;
  for (int s = 0; s < 10; ++s) {
    Eigen::VectorXd a(3), b(3);
    for (int j = 0; j < 3; ++j) {
      a(j) = 1e-3 + (50.0 - 1e-3) * u(gen);
      b(j) = 1e-3 + (50.0 - 1e-3) * u(gen);
    }
    const double fm = reduced_dirichlet_logpdf(p, 0.5 * (a + b));
    CHECK(fm >= 0.5 * (reduced_dirichlet_logpdf(p, a) + reduced_dirichlet_logpdf(p, b)) - 1e-9);
  }
}

TEST_CASE("M4 oracle keeps structural zeros and improves on random box points") {
  const auto m4 = ModelFamily::markov_dirichlet(3);
  Eigen::MatrixXd P(3, 3);
  P << 0.6, 0.4, 0.0, 0.2, 0.3, 0.5, 0.0, 0.7, 0.3;
  const auto theta = ParamPoint::transition_matrix(P);
  const auto star = oracle_hyperparameter(m4, theta);
  CHECK(star[2] == 0.0);
  CHECK(star[6] == 0.0);
  const double best = log_prior(m4, theta, star);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(1e-3, 50.0);
  for (int s = 0; s < 50; ++s) {
    Eigen::VectorXd a = star.values;
    for (int k = 0; k < 9; ++k)
      if (a(k) > 0.0) a(k) = u(gen);
    CHECK(best >= log_prior(m4, theta, make_hyper(m4, a)) - 1e-9);
  }
}

TEST_CASE("Fisher information") {
  CHECK(fisher_information(ModelFamily::normal_mean(1.0), ParamPoint::scalar(2.0))(0, 0) == 1.0);
  CHECK(std::abs(fisher_information(ModelFamily::normal_mean(2.5), ParamPoint::scalar(0.0))(0, 0) - 0.4) < 1e-15);

  // M3: negative Hessian of the expected per-observation log-likelihood at the truth.
  Eigen::MatrixXd V(2, 2);
  V << 1.0, 0.4, 0.4, 2.0;
  const double a0 = 0.3, s0 = 1.4;
  const Eigen::VectorXd b0 = vec({1.0, -0.5});
  const auto m3 = ModelFamily::g_prior_regression().with_gram(V);
  auto expected_ll = [&](const Eigen::VectorXd& t) {
    const double a = t(0), s = t(3);
    const Eigen::VectorXd db = t.segment(1, 2) - b0;
    return -std::log(s) - (s0 * s0 + (a - a0) * (a - a0) + db.dot(V * db)) / (2.0 * s * s);
  };
  const Eigen::VectorXd t0 = ParamPoint::g_prior(a0, b0, s0).values;
  const Eigen::MatrixXd fd = -numerics::finite_diff_hessian(expected_ll, t0, 1e-4);
  const Eigen::MatrixXd I3 = fisher_information(m3, ParamPoint::g_prior(a0, b0, s0));
  CHECK((I3 - fd).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs(I3(3, 3) - 2.0 / (s0 * s0)) < 1e-14);

  // M5 with known σ and orthogonal design: diag(v_jj / σ²).
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(3, 3);
  D.diagonal() << 1.0, 4.0, 0.5;
  const auto m5 = ModelFamily::bayes_lasso(LassoSigma::Fixed, 2.0).with_gram(D);
  const Eigen::MatrixXd I5 = fisher_information(m5, ParamPoint::vector(vec({1.0, 0.0, -1.0})));
  auto ll5 = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd db = b - vec({1.0, 0.0, -1.0});
    return -(2.0 + db.dot(D * db)) / (2.0 * 2.0);
  };
  CHECK((I5 + numerics::finite_diff_hessian(ll5, vec({1.0, 0.0, -1.0}), 1e-4)).cwiseAbs().maxCoeff() < 1e-6);

  CHECK_THROWS_AS(fisher_information(ModelFamily::indep_normal_regression(1.0), ParamPoint::vector(vec({1.0}))),
                  CapabilityError);
  CHECK_THROWS_AS(fisher_information(ModelFamily::bayes_lasso(LassoSigma::Jeffreys).with_gram(D),
                                     ParamPoint::vector(vec({1.0, 0.0, -1.0, 1.0}))),
                  CapabilityError);
}

TEST_CASE("M6 Fisher information matches the expected negative Hessian") {
  const auto m6 = ModelFamily::gauss_mixture(2, 2.0);
  const auto t0 = ParamPoint::gaussian_mixture(vec({0.4, 0.6}), vec({-1.0, 1.5}), vec({0.7, 1.2}));
  const Eigen::MatrixXd I = fisher_information(m6, t0);
  const Eigen::Index dim = t0.values.size();
  // E[−∇² ln p(Y)] by a fine trapezoid grid over y with finite-difference Hessians.
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(dim, dim);
  const int points = 3001;
  const double lo = -10.0, hi = 12.0, h = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double y = lo + i * h;
    const auto data = Dataset::observations(vec({y}));
    auto ll = [&](const Eigen::VectorXd& t) { return log_likelihood(m6, ParamPoint::vector(t), data); };
    const double dens = std::exp(ll(t0.values));
    const double w = (i == 0 || i == points - 1) ? 0.5 : 1.0;
    oracle -= w * h * dens * numerics::finite_diff_hessian(ll, t0.values, 1e-4);
  }
  CHECK((I - oracle).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(numerics::is_spd(I));
}

TEST_CASE("M1 posterior") {
  const auto m1 = ModelFamily::normal_mean(1.0);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y(i) = 2.0 + ((i % 2) ? 0.3 : -0.3);
  const auto data = Dataset::observations(y);
  const auto rep = posterior(m1, HyperParam::scalar("lambda", 4.0), data);
  CHECK(std::abs(mean_1d(rep) - 2.0 * 120.0 / 121.0) < 1e-13);
  CHECK(std::abs(sd_1d(rep) * sd_1d(rep) - 4.0 / 121.0) < 1e-14);

  // Quadrature normalization of likelihood × prior reproduces the density.
  auto joint = [&](double t) {
    return std::exp(log_likelihood(m1, ParamPoint::scalar(t), data) +
                    log_prior(m1, ParamPoint::scalar(t), HyperParam::scalar("lambda", 4.0)) + 40.0);
  };
  const double z = numerics::integrate(joint, -2.0, 6.0);
  for (double t : {1.7, 1.98, 2.2}) CHECK(std::abs(joint(t) / z - density_1d(rep, t)) < 1e-7 * density_1d(rep, t));

  const auto flat = posterior(m1, HyperParam::scalar("lambda", std::numeric_limits<double>::infinity()), data);
  CHECK(std::abs(mean_1d(flat) - 2.0) < 1e-13);
  CHECK(std::abs(sd_1d(flat) * sd_1d(flat) - 1.0 / 30.0) < 1e-15);

  const auto point = posterior(m1, HyperParam::scalar("lambda", 0.0), data);
  CHECK(mean_1d(point) == 0.0);
  CHECK(sd_1d(point) == 0.0);
}

TEST_CASE("M2 posterior keeps point masses at zero variances") {
  const Eigen::MatrixXd X = centered_normal_design(25, 3, 12);
  const Eigen::VectorXd y = X * vec({1.0, 0.0, -2.0}) + 0.1 * X.col(1);
  const auto m2 = ModelFamily::indep_normal_regression(1.0);
  const auto rep = std::get<ClosedGaussian>(posterior(m2, make_hyper(m2, vec({1.0, 0.0, 4.0})), Dataset::regression(X, y)));
  CHECK(rep.mean(1) == 0.0);
  CHECK(rep.cov.row(1).cwiseAbs().maxCoeff() == 0.0);
  // Active block equals the conjugate update on columns 0 and 2.
  Eigen::MatrixXd Xa(25, 2);
  Xa << X.col(0), X.col(2);
  Eigen::MatrixXd P = Xa.transpose() * Xa;
  P(0, 0) += 1.0;
  P(1, 1) += 0.25;
  const Eigen::VectorXd m = P.inverse() * Xa.transpose() * y;
  CHECK(std::abs(rep.mean(0) - m(0)) < 1e-12);
  CHECK(std::abs(rep.mean(2) - m(1)) < 1e-12);
}

TEST_CASE("M3 posterior is proportional to likelihood times prior") {
  const Eigen::Index n = 30, p = 2;
  const Eigen::MatrixXd X = centered_normal_design(n, p, 21);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd y = 0.5 + (X * vec({1.0, -0.7})).array();
  for (Eigen::Index i = 0; i < n; ++i) y(i) += 0.8 * z(gen);
  const auto data = Dataset::regression(X, y);
  const auto m3 = ModelFamily::g_prior_regression().with_gram(X.transpose() * X / static_cast<double>(n));
  const auto g = HyperParam::scalar("g", 2.0);
  const auto rep = posterior(m3, g, data);
  REQUIRE(std::holds_alternative<NormalInverseGamma>(rep));
  // The posterior is over (α, β, σ²); the prior density is over σ, hence the ln σ Jacobian term.
  auto post = [&](double a, double b1, double b2, double s) {
    Eigen::VectorXd x(4);
    x << a, b1, b2, s * s;
    return log_density(rep, x) + std::log(2.0 * s);
  };
  auto joint = [&](double a, double b1, double b2, double s) {
    const auto t = ParamPoint::g_prior(a, vec({b1, b2}), s);
    return log_likelihood(m3, t, data) + log_prior(m3, t, g);
  };
  const double ref = post(0.5, 1.0, -0.7, 0.8) - joint(0.5, 1.0, -0.7, 0.8);
  for (auto [a, b1, b2, s] : {std::tuple{0.2, 0.8, -0.3, 1.1}, std::tuple{0.9, 1.4, -1.0, 0.6},
                              std::tuple{0.4, 0.0, 0.0, 2.0}})
    CHECK(std::abs(post(a, b1, b2, s) - joint(a, b1, b2, s) - ref) < 1e-9);

  CHECK_THROWS_AS(posterior(m3, g, Dataset::regression(X.topRows(4), y.head(4))), InsufficientDataError);
}

TEST_CASE("M5 orthogonal posterior marginals integrate to one") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(20, 2);
  for (int i = 0; i < 20; ++i) X(i, i % 2) = (i % 4 < 2) ? 1.0 : -1.0;
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) y(i) = X.row(i).dot(vec({0.8, 0.0})) + 0.1 * std::sin(i);
  const auto m5 = ModelFamily::bayes_lasso(LassoSigma::Fixed, 1.0);
  const auto rep = posterior(m5, HyperParam::scalar("lambda", 3.0), Dataset::regression(X, y));
  REQUIRE(std::holds_alternative<LaplaceGaussianProduct>(rep));
  for (Eigen::Index j = 0; j < 2; ++j) {
    const auto mj = marginal(rep, j);
    const double mass = numerics::integrate([&](double b) { return density_1d(mj, b); }, -6.0, 6.0);
    CHECK(std::abs(mass - 1.0) < 1e-6);
    // density ∝ exp(−rate|b|) N(b; c, s²), checked as a ratio
    const auto& lg = std::get<LaplaceGaussianProduct>(rep);
    auto unnorm = [&](double b) {
      return -lg.rate * std::abs(b) + numerics::normal_logpdf(b, lg.center(j), lg.scale(j) * lg.scale(j));
    };
    CHECK(std::abs(std::log(density_1d(mj, 0.4)) - std::log(density_1d(mj, -0.2)) - unnorm(0.4) + unnorm(-0.2)) <
          1e-10);
  }
}

TEST_CASE("capability flags are backed by working evaluators") {
  const auto m1 = ModelFamily::normal_mean(1.0);
  CHECK(m1.capabilities().closed_fisher);
  CHECK_FALSE(ModelFamily::indep_normal_regression(1.0).capabilities().closed_fisher);
  CHECK_FALSE(ModelFamily::bayes_lasso(LassoSigma::Jeffreys).capabilities().closed_marginal);
  CHECK(ModelFamily::bayes_lasso(LassoSigma::Fixed).capabilities().closed_posterior);
  CHECK_FALSE(ModelFamily::markov_dirichlet(3).capabilities().closed_oracle);
  CHECK(ModelFamily::gauss_mixture(2, 2.0).capabilities().closed_oracle);
  CHECK(ModelFamily::overfitted_mixture(2, 1.0, 0.0, 1.0).capabilities().closed_oracle);
}

TEST_CASE("dataset CSV ingestion") {
  const std::string path = "ebib_test_dataset.csv";
  {
    std::ofstream out(path);
    out << "x2,y,x1\n1.5,0.25,-1\n2.5,-0.5,3\n";
  }
  const Dataset d = io::read_dataset_csv(path);
  CHECK(d.n == 2);
  REQUIRE(d.X.has_value());
  CHECK((*d.X)(0, 0) == -1.0);
  CHECK((*d.X)(1, 1) == 2.5);
  CHECK(d.y(1) == -0.5);

  {
    std::ofstream out(path);
    out << "y\n1\n2\n3\n";
  }
  const Dataset obs = io::read_dataset_csv(path);
  CHECK(obs.n == 3);
  CHECK_FALSE(obs.X.has_value());

  {
    std::ofstream out(path);
    out << "3,1,0\n0,2,2\n1,0,4\n";
  }
  const Eigen::MatrixXi counts = io::read_count_matrix_csv(path);
  CHECK(counts.sum() == 13);
  CHECK(counts(2, 2) == 4);

  {
    std::ofstream out(path);
    out << "3,-1\n0,2\n";
  }
  CHECK_THROWS(io::read_count_matrix_csv(path));
  std::remove(path.c_str());
}
