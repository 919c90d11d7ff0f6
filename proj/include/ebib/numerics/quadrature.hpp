#pragma once

#include <functional>

#include <Eigen/Core>

namespace ebib::numerics {

enum class QuadratureScheme { AdaptiveSimpson, GaussHermite, TrapezoidGrid };

struct QuadratureSpec {
  QuadratureScheme scheme = QuadratureScheme::AdaptiveSimpson;
  double abs_tol = 1e-9;
  int max_depth = 40;
  int grid_points = 2001;

  /// Throws DomainError when abs_tol <= 0, grid_points < 16 or max_depth < 4.
  void validate() const;
};

using ScalarFunction = std::function<double(double)>;

/// Definite integral of f over [a, b].
///
/// AdaptiveSimpson and TrapezoidGrid require finite a < b. GaussHermite requires
/// a = -inf, b = +inf and integrates f(x) e^{-x²} (the weight is factored out of f),
/// using 64 nodes. Adaptive Simpson throws AccuracyError (with the best estimate)
/// when max_depth is exhausted before abs_tol is met.
double integrate(const ScalarFunction& f, double a, double b, const QuadratureSpec& spec = {});

/// E[f(X)] for X ~ N(mean, sd²) by Gauss-Hermite quadrature of the given order.
double integrate_gaussian(const ScalarFunction& f, double mean, double sd, int order = 64);

struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // for the weight e^{-x²}; weights sum to √π
};

/// Golub-Welsch nodes and weights; order 64 is computed once and cached.
const GaussHermiteRule& gauss_hermite_rule(int order = 64);

}  // namespace ebib::numerics
