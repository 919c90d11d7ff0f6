#include "ebib/rng.hpp"

#include <cmath>

#include "ebib/errors.hpp"

namespace ebib {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = base;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t level : path) {
    state = out ^ (level * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL);
    out = splitmix64(state);
  }
  return out;
}

namespace random {

double standard_normal(Engine& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double uniform(Engine& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double gamma(Engine& rng, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw DomainError("gamma: shape and scale must be positive");
  if (shape < 1.0) {
    // Boost small shapes: Γ(a) = Γ(a+1)·U^{1/a}, keeps tiny values representable in log space.
    const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
    const double u = uniform(rng);
    return scale * g * std::exp(std::log(u > 0.0 ? u : 1e-300) / shape);
  }
  return std::gamma_distribution<double>(shape, scale)(rng);
}

double inverse_gamma(Engine& rng, double shape, double rate) { return 1.0 / gamma(rng, shape, 1.0 / rate); }

double inverse_gaussian(Engine& rng, double mean, double shape) {
  if (!(mean > 0.0) || !(shape > 0.0)) throw DomainError("inverse_gaussian: parameters must be positive");
  const double nu = standard_normal(rng);
  const double y = nu * nu;
  const double my = mean * y;
  double x = mean + mean * my / (2.0 * shape) - mean / (2.0 * shape) * std::sqrt(4.0 * shape * my + my * my);
  if (!(x > 0.0)) x = mean * mean / (mean + my);  // cancellation guard; the smaller root is x·x' = mean²
  const double z = uniform(rng);
  return z <= mean / (mean + x) ? x : mean * mean / x;
}

Eigen::VectorXd dirichlet(Engine& rng, const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  // Gamma draws in log space so that concentrations far below 1 do not underflow to an all-zero vector.
  const Eigen::Index k = alpha.size();
  Eigen::VectorXd logg(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double a = alpha(j);
    if (!(a > 0.0)) throw DomainError("dirichlet: concentrations must be positive");
    if (a < 1.0) {
      const double g = std::gamma_distribution<double>(a + 1.0, 1.0)(rng);
      double u = uniform(rng);
      if (u <= 0.0) u = 1e-300;
      logg(j) = std::log(g) + std::log(u) / a;
    } else {
      logg(j) = std::log(std::gamma_distribution<double>(a, 1.0)(rng));
    }
  }
  const double m = logg.maxCoeff();
  Eigen::VectorXd w = (logg.array() - m).exp();
  return w / w.sum();
}

Eigen::VectorXd gaussian_from_precision(Engine& rng, const Eigen::MatrixXd& lower, const Eigen::VectorXd& b) {
  const Eigen::Index d = b.size();
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = standard_normal(rng);
  const auto L = lower.triangularView<Eigen::Lower>();
  const Eigen::VectorXd mean = L.transpose().solve(L.solve(b));
  return mean + L.transpose().solve(z);
}

int categorical_from_log(Engine& rng, const Eigen::Ref<const Eigen::VectorXd>& log_weights) {
  const double m = log_weights.maxCoeff();
  Eigen::VectorXd w = (log_weights.array() - m).exp();
  double u = uniform(rng) * w.sum();
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    u -= w(j);
    if (u <= 0.0) return static_cast<int>(j);
  }
  return static_cast<int>(w.size() - 1);
}

}  // namespace random
}  // namespace ebib
