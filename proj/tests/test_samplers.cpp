#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "ebib/errors.hpp"
#include "ebib/merging.hpp"
#include "ebib/models/models.hpp"
#include "ebib/rng.hpp"
#include "ebib/samplers.hpp"

using namespace ebib;

namespace {

Eigen::MatrixXd alternating_design(Eigen::Index n) {
  Eigen::MatrixXd X(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) X(i, 0) = i % 2 ? 1.0 : -1.0;
  return X;
}

// E[Σ_k p_k² | y] by summing over every allocation of y to K clusters.
double sum_sq_weights_by_allocation(const Eigen::VectorXd& y, double lambda, int K,
                                    const mixture::NormalKnownVariance& base) {
  const int n = static_cast<int>(y.size());
  long total = 1;
  for (int i = 0; i < n; ++i) total *= K;
  std::vector<double> logw, value;
  for (long code = 0; code < total; ++code) {
    std::vector<mixture::ClusterStats> stats(K);
    long c = code;
    for (int i = 0; i < n; ++i) {
      stats[c % K].add(y(i));
      c /= K;
    }
    double lw = std::lgamma(K * lambda) - std::lgamma(K * lambda + n);
    double v = 0.0;
    for (const auto& s : stats) {
      lw += std::lgamma(lambda + s.count) - std::lgamma(lambda) + base.log_marginal(s);
      const double a = lambda + s.count, A = K * lambda + n;
      v += a * (a + 1.0) / (A * (A + 1.0));
    }
    logw.push_back(lw);
    value.push_back(v);
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < logw.size(); ++k) {
    const double w = std::exp(logw[k] - top);
    num += w * value[k];
    den += w;
  }
  return num / den;
}

}  // namespace

TEST_CASE("simulate") {
  const auto m1 = ModelFamily::normal_mean(2.0);
  CHECK(simulate(m1, ParamPoint::scalar(1.0), 0, 1).n == 0);
  const Eigen::Index n = 100000;
  const auto d = simulate(m1, ParamPoint::scalar(1.5), n, 3);
  CHECK(d.y.size() == n);
  CHECK(std::abs(d.y.mean() - 1.5) < 4.0 * std::sqrt(2.0 / n));
  const double var = (d.y.array() - d.y.mean()).square().sum() / (n - 1);
  CHECK(std::abs(var - 2.0) < 4.0 * 2.0 * std::sqrt(2.0 / n));
  CHECK(simulate(m1, ParamPoint::scalar(1.5), 50, 9).y == simulate(m1, ParamPoint::scalar(1.5), 50, 9).y);

  const auto m4 = ModelFamily::markov_dirichlet(3);
  Eigen::VectorXd p(9);
  p << 0.2, 0.5, 0.3, 0.0, 1.0, 0.0, 0.4, 0.4, 0.2;
  const auto chain = simulate(m4, ParamPoint::vector(p), 500, 5);
  REQUIRE(chain.counts.has_value());
  CHECK(chain.counts->sum() == 500);
  CHECK(chain.path.size() == 501u);
  CHECK(chain.path.front() == 0);
  CHECK((*chain.counts)(1, 0) == 0);
  CHECK((*chain.counts)(1, 2) == 0);

  const Eigen::MatrixXd U = uniform_design(2000, 3, -10.0, 10.0, 4);
  CHECK(U.minCoeff() >= -10.0);
  CHECK(U.maxCoeff() <= 10.0);
  CHECK(std::abs(U.mean()) < 4.0 * 20.0 / std::sqrt(12.0 * 6000.0));
}

TEST_CASE("inverse Gaussian moments") {
  Engine rng(7);
  const int draws = 100000;
  for (auto [mu, shape] : {std::pair{1.0, 2.0}, std::pair{0.3, 5.0}, std::pair{4.0, 0.5}, std::pair{1e-3, 1e-2}}) {
    double s = 0.0, ss = 0.0;
    int nonpositive = 0;
    for (int i = 0; i < draws; ++i) {
      const double x = random::inverse_gaussian(rng, mu, shape);
      nonpositive += !(x > 0.0);
      s += x;
      ss += x * x;
    }
    CHECK(nonpositive == 0);
    const double mean = s / draws, var = ss / draws - mean * mean;
    const double true_var = mu * mu * mu / shape;
    CHECK(std::abs(mean - mu) < 3.0 * std::sqrt(true_var / draws));
    // relative SE of a sample variance is about sqrt((κ − 1)/N), with excess kurtosis 15μ/λ
    CHECK(std::abs(var / true_var - 1.0) < 3.0 * std::sqrt((15.0 * mu / shape + 2.0) / draws));
  }
  CHECK_THROWS_AS(random::inverse_gaussian(rng, 0.0, 1.0), DomainError);
}

TEST_CASE("Dirichlet draws") {
  Engine rng(2);
  Eigen::VectorXd alpha(3);
  alpha << 0.5, 1.0, 2.5;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  const int draws = 50000;
  double worst = 0.0;
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXd p = random::dirichlet(rng, alpha);
    worst = std::max(worst, std::abs(p.sum() - 1.0));
    mean += p;
  }
  CHECK(worst < 1e-12);
  mean /= draws;
  for (int k = 0; k < 3; ++k) {
    const double m = alpha(k) / 4.0, sd = std::sqrt(m * (1.0 - m) / 5.0);
    CHECK(std::abs(mean(k) - m) < 3.0 * sd / std::sqrt(static_cast<double>(draws)));
  }
  const Eigen::VectorXd tiny = random::dirichlet(rng, Eigen::VectorXd::Constant(4, 1e-4));
  CHECK(std::abs(tiny.sum() - 1.0) < 1e-12);
}

TEST_CASE("chain ESS and batch means") {
  Engine rng(5);
  Eigen::VectorXd iid(20000), ar(20000);
  double prev = 0.0;
  for (Eigen::Index i = 0; i < iid.size(); ++i) {
    iid(i) = random::standard_normal(rng);
    prev = 0.9 * prev + std::sqrt(1.0 - 0.81) * random::standard_normal(rng);
    ar(i) = prev;
  }
  CHECK(chain_ess(iid) > 0.8 * 20000);
  // AR(1) with φ = 0.9 has ESS about n (1 − φ)/(1 + φ)
  const double expected = 20000.0 * 0.1 / 1.9;
  CHECK(chain_ess(ar) > 0.6 * expected);
  CHECK(chain_ess(ar) < 1.6 * expected);
  CHECK(std::abs(batch_means_stderr(iid) - 1.0 / std::sqrt(20000.0)) < 0.5 / std::sqrt(20000.0));
}

TEST_CASE("LASSO Gibbs with fixed tau2 matches the conjugate posterior") {
  const Eigen::Index n = 40;
  const Eigen::MatrixXd X = uniform_design(n, 2, -1.0, 1.0, 8);
  const Eigen::VectorXd y = X * Eigen::Vector2d(0.7, -0.3) + simulate(ModelFamily::normal_mean(0.25), ParamPoint::scalar(0.0), n, 9).y;
  const Eigen::Vector2d tau2(0.4, 2.0);
  const double sigma2 = 0.25;
  LassoGibbs g(Dataset::regression(X, y), LassoSigma::Fixed, sigma2, 10);
  g.fix_tau2(tau2);
  GibbsConfig cfg;
  cfg.iters = 40000;
  cfg.burnin = 100;
  cfg.seed = 10;
  const auto out = g.run(1.0, cfg);
  Eigen::MatrixXd A = X.transpose() * X;
  A.diagonal() += tau2.cwiseInverse();
  const Eigen::VectorXd mean = A.ldlt().solve(X.transpose() * y);
  const Eigen::MatrixXd cov = sigma2 * A.inverse();
  const double N = static_cast<double>(out.draws.rows());
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd b = out.draws.col(j);
    CHECK(std::abs(b.mean() - mean(j)) < 3.0 * std::sqrt(cov(j, j) / N));
    const double v = (b.array() - b.mean()).square().sum() / (N - 1);
    CHECK(std::abs(v - cov(j, j)) < 3.0 * cov(j, j) * std::sqrt(2.0 / N));
  }
  CHECK((out.draws.col(2).array() == 0.4).all());
}

TEST_CASE("LASSO Gibbs marginal matches the closed posterior") {
  const Eigen::Index n = 20;
  const Eigen::MatrixXd X = alternating_design(n);
  Eigen::VectorXd y = X.col(0) * 0.4;
  y(0) += 0.5;
  y(3) -= 0.2;
  const auto data = Dataset::regression(X, y);
  GibbsConfig cfg;
  cfg.iters = 51000;
  cfg.burnin = 1000;
  cfg.seed = 33;
  const auto out = gibbs_lasso(data, 3.0, LassoSigma::Fixed, 1.0, cfg);
  CHECK(out.draws.rows() == 50000);
  CHECK(out.names.front() == "beta_1");
  const auto exact = posterior(ModelFamily::bayes_lasso(LassoSigma::Fixed, 1.0), HyperParam::scalar("lambda", 3.0), data);
  WeightedSamples s;
  s.draws = out.draws.leftCols(1);
  s.weights = Eigen::VectorXd::Ones(s.draws.rows());
  CHECK(l1_distance(PosteriorRep{s}, exact) < 0.05);
}

TEST_CASE("LASSO Gibbs shrinks under a large penalty and is deterministic") {
  const Eigen::Index n = 30;
  const Eigen::MatrixXd X = uniform_design(n, 3, -10.0, 10.0, 1);
  const Eigen::VectorXd y = X * Eigen::Vector3d(0.0, 0.5, -0.2) +
                            simulate(ModelFamily::normal_mean(1.0), ParamPoint::scalar(0.0), n, 2).y;
  const auto data = Dataset::regression(X, y);
  GibbsConfig cfg;
  cfg.iters = 3000;
  cfg.burnin = 500;
  cfg.seed = 4;
  const auto weak = gibbs_lasso(data, 0.01, LassoSigma::Jeffreys, 1.0, cfg);
  const auto strong = gibbs_lasso(data, 500.0, LassoSigma::Jeffreys, 1.0, cfg);
  CHECK(strong.draws.leftCols(3).cwiseAbs().colwise().mean().sum() < weak.draws.leftCols(3).cwiseAbs().colwise().mean().sum());
  CHECK(std::abs(strong.draws.col(1).mean()) < 0.1);
  const auto again = gibbs_lasso(data, 500.0, LassoSigma::Jeffreys, 1.0, cfg);
  CHECK(again.draws == strong.draws);
  CHECK_THROWS_AS(gibbs_lasso(data, 0.0, LassoSigma::Jeffreys, 1.0, cfg), DomainError);
  GibbsConfig bad = cfg;
  bad.burnin = bad.iters;
  CHECK_THROWS_AS(gibbs_lasso(data, 1.0, LassoSigma::Jeffreys, 1.0, bad), ValidationError);
}

TEST_CASE("mixture Gibbs with no data samples the prior") {
  const mixture::NormalKnownVariance base{1.0, 0.0, 1.0};
  GibbsConfig cfg;
  cfg.iters = 20000;
  cfg.burnin = 0;
  cfg.seed = 6;
  const auto out = gibbs_mixture_weights(Dataset::observations(Eigen::VectorXd(0)), 0.7, 3, base, cfg);
  REQUIRE(out.draws.cols() == 6);
  const double sd = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / (3.0 * 0.7 + 1.0));
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(out.draws.col(k).mean() - 1.0 / 3.0) < 4.0 * sd / std::sqrt(static_cast<double>(cfg.iters)));
}

TEST_CASE("overfitted mixture empties the extra component") {
  const mixture::NormalKnownVariance base{1.0, 0.0, 1.0};
  const auto data = simulate(ModelFamily::normal_mean(1.0), ParamPoint::scalar(0.0), 400, 12);
  GibbsConfig cfg;
  cfg.iters = 6000;
  cfg.burnin = 1000;
  cfg.seed = 13;
  const auto out = gibbs_mixture_weights(data, 0.5, 2, base, cfg);
  const Eigen::VectorXd pmin = out.draws.leftCols(2).rowwise().minCoeff();
  CHECK(pmin.mean() < 0.2);
  const Eigen::VectorXd counts = out.draws.col(2) + out.draws.col(3);
  CHECK((counts.array() == 400.0).all());
  CHECK(gibbs_mixture_weights(data, 0.5, 2, base, cfg).draws == out.draws);
}

TEST_CASE("mixture Gibbs agrees with allocation enumeration") {
  const mixture::NormalKnownVariance base{1.0, 0.0, 4.0};
  Eigen::VectorXd y(8);
  y << -2.1, -1.7, -1.9, -2.4, 1.8, 2.2, 2.0, 1.5;
  const double lambda = 0.8;
  const double exact = sum_sq_weights_by_allocation(y, lambda, 2, base);
  GibbsConfig cfg;
  cfg.iters = 101000;
  cfg.burnin = 1000;
  cfg.seed = 14;
  const auto out = gibbs_mixture_weights(Dataset::observations(y), lambda, 2, base, cfg);
  const Eigen::VectorXd sq = out.draws.leftCols(2).array().square().rowwise().sum();
  CHECK(std::abs(sq.mean() - exact) < 3.0 * batch_means_stderr(sq));

  const auto full = gibbs_mixture(y, Eigen::VectorXd::Constant(2, lambda), base, cfg);
  CHECK(full.draws.cols() == 6);
  CHECK(full.names.size() == 6u);
  CHECK(full.ess.size() == 6);
  CHECK((full.ess.array() > 0.0).all());
}
