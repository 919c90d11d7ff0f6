#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <Eigen/Core>

namespace ebib::optim {

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::Index size() const { return lower.size(); }
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Golden-section maximization of a unimodal f on [lo, hi] until the bracket is narrower than tol.
/// A final parabolic step through (x−h, x, x+h) is taken when it stays inside the last bracket.
OptimResult golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol,
                               int max_iter = 1000);

struct NelderMeadOptions {
  int restarts = 5;
  int max_iter = 20000;
  double tol = 1e-10;  // spread of simplex values
  std::uint64_t seed = 0;
  int polish_rounds = 30;
};

/// Box-constrained Nelder-Mead maximization (vertices clamped to the box).
/// Restart 0 starts at `start` (or the box center); the others start at uniform points drawn from
/// derive_seed(seed, {restart, stream::restarts}). The best result is polished by cyclic
/// coordinate golden-section searches.
OptimResult nelder_mead_box_max(const std::function<double(const Eigen::VectorXd&)>& f, const Box& box,
                                const NelderMeadOptions& options = {},
                                const std::optional<Eigen::VectorXd>& start = std::nullopt);

}  // namespace ebib::optim
