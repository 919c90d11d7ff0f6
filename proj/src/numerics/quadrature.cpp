#include "ebib/numerics/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "ebib/errors.hpp"

namespace ebib::numerics {

void QuadratureSpec::validate() const {
  if (!(abs_tol > 0.0)) throw DomainError("QuadratureSpec: abs_tol must be positive");
  if (grid_points < 16) throw DomainError("QuadratureSpec: grid_points must be at least 16");
  if (max_depth < 4) throw DomainError("QuadratureSpec: max_depth must be at least 4");
}

namespace {

struct SimpsonState {
  const ScalarFunction& f;
  int max_depth;
  bool exhausted = false;
};

double simpson_recurse(SimpsonState& st, double a, double b, double fa, double fm, double fb, double whole,
                       double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = st.f(lm);
  const double frm = st.f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth >= st.max_depth) {
    st.exhausted = true;
    return left + right + delta / 15.0;
  }
  return simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

double adaptive_simpson(const ScalarFunction& f, double a, double b, const QuadratureSpec& spec) {
  // A few initial panels keep narrow peaks from being stepped over by the first Simpson estimate.
  constexpr int panels = 16;
  SimpsonState st{f, spec.max_depth};
  const double h = (b - a) / panels;
  double total = 0.0;
  double fa = f(a);
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double hi = (p + 1 == panels) ? b : lo + h;
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    const double fb = f(hi);
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_recurse(st, lo, hi, fa, fm, fb, whole, spec.abs_tol / panels, 0);
    fa = fb;
  }
  if (st.exhausted) throw AccuracyError("integrate: max_depth exhausted before abs_tol was met", total);
  return total;
}

double trapezoid_grid(const ScalarFunction& f, double a, double b, int points) {
  const double h = (b - a) / (points - 1);
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < points - 1; ++i) s += f(a + i * h);
  return s * h;
}

GaussHermiteRule golub_welsch(int order) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double off = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = std::sqrt(std::numbers::pi) * eig.eigenvectors().row(0).transpose().array().square();
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(int order) {
  if (order == 64) {
    static const GaussHermiteRule cached = golub_welsch(64);
    return cached;
  }
  thread_local GaussHermiteRule scratch;
  if (order < 1) throw DomainError("gauss_hermite_rule: order must be positive");
  scratch = golub_welsch(order);
  return scratch;
}

double integrate(const ScalarFunction& f, double a, double b, const QuadratureSpec& spec) {
  spec.validate();
  switch (spec.scheme) {
    case QuadratureScheme::GaussHermite: {
      if (!(std::isinf(a) && a < 0 && std::isinf(b) && b > 0))
        throw DomainError("integrate: gauss-hermite requires the whole real line");
      const auto& rule = gauss_hermite_rule(64);
      double s = 0.0;
      for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) s += rule.weights(i) * f(rule.nodes(i));
      return s;
    }
    case QuadratureScheme::AdaptiveSimpson:
    case QuadratureScheme::TrapezoidGrid:
      if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("integrate: infinite endpoint");
      if (!(a < b)) throw DomainError("integrate: requires a < b");
      return spec.scheme == QuadratureScheme::AdaptiveSimpson ? adaptive_simpson(f, a, b, spec)
                                                              : trapezoid_grid(f, a, b, spec.grid_points);
  }
  throw DomainError("integrate: unknown scheme");
}

double integrate_gaussian(const ScalarFunction& f, double mean, double sd, int order) {
  const auto& rule = gauss_hermite_rule(order);
  const double scale = std::numbers::sqrt2 * sd;
  double s = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) s += rule.weights(i) * f(mean + scale * rule.nodes(i));
  return s / std::sqrt(std::numbers::pi);
}

}  // namespace ebib::numerics
