#pragma once

#include <Eigen/Core>

namespace ebib::numerics {

/// Central-difference gradient; error O(h²) for smooth f.
template <typename F, typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> finite_diff_gradient(
    F&& f, const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar h) {
  using Vec = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
  Vec grad(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const auto xi = probe(i);
    probe(i) = xi + h;
    const auto fp = f(probe);
    probe(i) = xi - h;
    const auto fm = f(probe);
    probe(i) = xi;
    grad(i) = (fp - fm) / (2 * h);
  }
  return grad;
}

/// Central-difference Hessian (symmetrized).
template <typename F, typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> finite_diff_hessian(
    F&& f, const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar h) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index d = x.size();
  Mat hess(d, d);
  Vec p = x;
  const Scalar f0 = f(p);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      if (i == j) {
        const Scalar xi = p(i);
        p(i) = xi + h;
        const Scalar fp = f(p);
        p(i) = xi - h;
        const Scalar fm = f(p);
        p(i) = xi;
        hess(i, i) = (fp - 2 * f0 + fm) / (h * h);
      } else {
        const Scalar xi = p(i), xj = p(j);
        p(i) = xi + h; p(j) = xj + h; const Scalar fpp = f(p);
        p(j) = xj - h; const Scalar fpm = f(p);
        p(i) = xi - h; const Scalar fmm = f(p);
        p(j) = xj + h; const Scalar fmp = f(p);
        p(i) = xi; p(j) = xj;
        hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4 * h * h);
      }
    }
  }
  return hess;
}

}  // namespace ebib::numerics
