#include "ebib/mixture.hpp"

#include <limits>
#include <vector>

#include "ebib/errors.hpp"

namespace ebib::mixture {

double log_allocation_prior(const Eigen::Ref<const Eigen::VectorXd>& counts,
                            const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  const double a = alpha.sum();
  double out = std::lgamma(a) - std::lgamma(a + counts.sum());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) out += std::lgamma(alpha(k) + counts(k)) - std::lgamma(alpha(k));
  return out;
}

template <class Base>
EnumerationResult enumerate_allocations(const Eigen::Ref<const Eigen::VectorXd>& y,
                                        const Eigen::Ref<const Eigen::VectorXd>& alpha, const Base& base) {
  const Eigen::Index K = alpha.size();
  const Eigen::Index n = y.size();
  if (K < 1) throw DomainError("enumerate_allocations: need K >= 1");
  if ((alpha.array() <= 0.0).any()) throw DomainError("enumerate_allocations: alpha must be positive");
  double total = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    total *= static_cast<double>(K);
    if (total > 1048576.0) throw CapacityError("enumerate_allocations: K^n exceeds 2^20");
  }
  // lgamma(α_k + c) for c = 0..n, so each allocation costs O(K) table reads.
  Eigen::MatrixXd lg(K, n + 1);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index c = 0; c <= n; ++c) lg(k, c) = std::lgamma(alpha(k) + c);
  const double a = alpha.sum();
  double constant = std::lgamma(a) - std::lgamma(a + n);
  for (Eigen::Index k = 0; k < K; ++k) constant -= std::lgamma(alpha(k));

  std::vector<int> z(n, 0);
  std::vector<ClusterStats> stats(K);
  for (Eigen::Index i = 0; i < n; ++i) stats[0].add(y(i));
  std::vector<double> cluster_lm(K);
  for (Eigen::Index k = 0; k < K; ++k) cluster_lm[k] = base.log_marginal(stats[k]);

  // Streaming log-sum-exp plus the weighted sum of E[p | z] = (α + n_z)/(|α| + n).
  double m = -std::numeric_limits<double>::infinity();
  double s = 0.0;
  Eigen::VectorXd wsum = Eigen::VectorXd::Zero(K);
  auto accumulate = [&]() {
    double v = constant;
    for (Eigen::Index k = 0; k < K; ++k) v += lg(k, static_cast<Eigen::Index>(stats[k].count)) + cluster_lm[k];
    Eigen::VectorXd ep(K);
    for (Eigen::Index k = 0; k < K; ++k) ep(k) = (alpha(k) + stats[k].count) / (a + n);
    if (v > m) {
      const double scale = std::exp(m - v);
      s = s * scale + 1.0;
      wsum = wsum * scale + ep;
      m = v;
    } else {
      const double w = std::exp(v - m);
      s += w;
      wsum += w * ep;
    }
  };
  auto move = [&](Eigen::Index i, int from, int to) {
    stats[from].remove(y(i));
    stats[to].add(y(i));
    cluster_lm[from] = base.log_marginal(stats[from]);
    cluster_lm[to] = base.log_marginal(stats[to]);
  };

  accumulate();
  while (true) {
    Eigen::Index pos = n - 1;
    while (pos >= 0 && z[pos] == K - 1) {
      move(pos, static_cast<int>(K - 1), 0);
      z[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    move(pos, z[pos], z[pos] + 1);
    ++z[pos];
    accumulate();
  }
  EnumerationResult out;
  out.log_marginal = m + std::log(s);
  out.posterior_mean_weights = wsum / s;
  return out;
}

template EnumerationResult enumerate_allocations<NormalKnownVariance>(const Eigen::Ref<const Eigen::VectorXd>&,
                                                                      const Eigen::Ref<const Eigen::VectorXd>&,
                                                                      const NormalKnownVariance&);
template EnumerationResult enumerate_allocations<NormalInverseGammaBase>(const Eigen::Ref<const Eigen::VectorXd>&,
                                                                         const Eigen::Ref<const Eigen::VectorXd>&,
                                                                         const NormalInverseGammaBase&);

}  // namespace ebib::mixture
