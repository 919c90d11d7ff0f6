#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace ebib {

using Engine = std::mt19937_64;

/// One step of the splitmix64 generator; advances state.
std::uint64_t splitmix64(std::uint64_t& state);

/// Hierarchical stream seed: base → replication → role, each level mixed through splitmix64.
///   derive_seed(base, {replication, role})
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

/// Fixed role tags for derive_seed, so streams stay disjoint across components.
namespace stream {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t chain = 2;
inline constexpr std::uint64_t restarts = 3;
inline constexpr std::uint64_t design = 4;
inline constexpr std::uint64_t monte_carlo = 5;
}  // namespace stream

namespace random {

double standard_normal(Engine& rng);
double uniform(Engine& rng);
double gamma(Engine& rng, double shape, double scale);
double inverse_gamma(Engine& rng, double shape, double rate);

/// Inverse-Gaussian(mean, shape) by the transformation-with-rejection method of Michael, Schucany and Haas.
double inverse_gaussian(Engine& rng, double mean, double shape);

Eigen::VectorXd dirichlet(Engine& rng, const Eigen::Ref<const Eigen::VectorXd>& alpha);

/// Draw from N(precision⁻¹ b, precision⁻¹) given the Cholesky factor L of the precision (L Lᵀ = P).
Eigen::VectorXd gaussian_from_precision(Engine& rng, const Eigen::MatrixXd& precision_llt_lower,
                                        const Eigen::VectorXd& b);

int categorical_from_log(Engine& rng, const Eigen::Ref<const Eigen::VectorXd>& log_weights);

}  // namespace random
}  // namespace ebib
