#include "ebib/numerics/gaussian.hpp"

#include <algorithm>
#include <vector>

#include "ebib/numerics/special.hpp"

namespace ebib::numerics {

double gaussian_kl(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1, const Eigen::VectorXd& mu2,
                   const Eigen::MatrixXd& cov2) {
  Eigen::LLT<Eigen::MatrixXd> l1(cov1), l2(cov2);
  if (l1.info() != Eigen::Success || l2.info() != Eigen::Success)
    throw DomainError("gaussian_kl: covariance not SPD");
  const double logdet1 = 2.0 * l1.matrixLLT().diagonal().array().log().sum();
  const double logdet2 = 2.0 * l2.matrixLLT().diagonal().array().log().sum();
  const double trace = l2.solve(cov1).trace();
  const Eigen::VectorXd diff = mu2 - mu1;
  const double quad = diff.dot(l2.solve(diff));
  return 0.5 * (trace + quad - static_cast<double>(mu1.size()) + logdet2 - logdet1);
}

double gaussian_l1_1d(double m1, double v1, double m2, double v2) {
  if (!(v1 > 0.0 && v2 > 0.0)) throw DomainError("gaussian_l1_1d: variances must be positive");
  // log p − log q = a x² + b x + c, whose roots split the line into sign-constant pieces.
  const double a = 0.5 / v2 - 0.5 / v1;
  const double b = m1 / v1 - m2 / v2;
  const double c = 0.5 * m2 * m2 / v2 - 0.5 * m1 * m1 / v1 + 0.5 * std::log(v2 / v1);
  std::vector<double> cuts;
  if (std::abs(a) < 1e-14 * (0.5 / v1 + 0.5 / v2)) {
    if (b != 0.0) cuts.push_back(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc > 0.0) {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (b + std::copysign(sq, b));
      cuts.push_back(q / a);
      cuts.push_back(c / q);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  const double s1 = std::sqrt(v1), s2 = std::sqrt(v2);
  auto mass_p = [&](double lo, double hi) { return normal_cdf((hi - m1) / s1) - normal_cdf((lo - m1) / s1); };
  auto mass_q = [&](double lo, double hi) { return normal_cdf((hi - m2) / s2) - normal_cdf((lo - m2) / s2); };
  double lo = -std::numeric_limits<double>::infinity();
  double l1 = 0.0;
  for (double cut : cuts) {
    l1 += std::abs(mass_p(lo, cut) - mass_q(lo, cut));
    lo = cut;
  }
  l1 += std::abs(mass_p(lo, std::numeric_limits<double>::infinity()) -
                 mass_q(lo, std::numeric_limits<double>::infinity()));
  return std::clamp(l1, 0.0, 2.0);
}

}  // namespace ebib::numerics
