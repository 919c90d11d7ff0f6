// Discrete-structure experiments: overfitted mixture MMLE, Markov sparsity, sampler validation.
#include <cmath>

#include "ebib/errors.hpp"
#include "ebib/marginal.hpp"
#include "ebib/merging.hpp"
#include "ebib/mixture.hpp"
#include "ebib/mmle.hpp"
#include "ebib/models/models.hpp"
#include "ebib/rng.hpp"
#include "ebib/samplers.hpp"
#include "internal.hpp"

using nlohmann::json;

namespace ebib::experiments::detail {
namespace {

ModelFamily overfitted(const Params& p) {
  return ModelFamily::overfitted_mixture(p.integer("K"), p.num("component_variance"), p.num("prior_mean"),
                                         p.num("prior_variance"));
}

ParamPoint single_component_truth(const Params& p) {
  const int K = p.integer("K");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
  w(0) = 1.0;
  return ParamPoint::location_mixture(w, Eigen::VectorXd::Constant(K, p.num("gamma0")));
}

MarginalStrategy reweighting(const Params& p, int draws, std::uint64_t seed) {
  MarginalStrategy s;
  s.kind = MarginalKind::Reweighting;
  s.reference = HyperParam::scalar("lambda", p.num("lambda_ref"));
  s.draws = draws;
  s.burnin = p.integer("burnin");
  s.seed = seed;
  return s;
}

Outcome mixture_rate(const Context& ctx) {
  const auto& p = ctx.params;
  const auto f = overfitted(p);
  const auto truth = single_component_truth(p);
  const auto grid = log_grid(p.num("grid_lo"), p.num("grid_hi"), p.integer("grid_points"));
  const auto ns = p.ints("n_grid");
  const int S = ctx.config.seed_count;
  std::vector<std::vector<double>> rows(ns.size() * S);
  parallel_for(static_cast<int>(rows.size()), ctx.threads, [&](int k) {
    const int n = ns[k / S], rep = k % S;
    const std::uint64_t seed = rep_seed(ctx.config, rep, n);
    const auto data = simulate(f, truth, n, seed);
    const auto res =
        mmle_grid(f, data, RestrictedDomain::points(grid), reweighting(p, p.integer("draws"), derive_seed(seed, {stream::chain})));
    double bad = 0.0;
    for (bool u : res.unreliable) bad += u;
    const double ln = std::log(double(n));
    rows[k] = {double(n), double(rep), res.lambda_hat[0], res.lambda_hat[0] * ln / std::log(ln), bad};
  });
  Outcome out;
  auto t = table("results", {"n", "seed", "lambda_hat", "scaled", "unreliable_points"});
  t.header = {"lambda_ref: " + io::format_double(p.num("lambda_ref")),
              "grid: log-spaced " + io::format_double(grid.front()) + ".." + io::format_double(grid.back()) + " (" +
                  std::to_string(grid.size()) + " points)"};
  std::vector<double> med, scaled;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    std::vector<double> a, b;
    double at_edge = 0.0;
    for (int r = 0; r < S; ++r) {
      a.push_back(rows[i * S + r][2]);
      b.push_back(rows[i * S + r][3]);
      at_edge += rows[i * S + r][2] == grid.front();
    }
    med.push_back(median(a));
    scaled.push_back(median(b));
    const auto key = std::to_string(ns[i]);
    out.stats["fraction_at_lower_edge"][key] = at_edge / S;
    out.stats["median_lambda_hat"][key] = med.back();
    out.stats["median_scaled"][key] = scaled.back();
  }
  for (auto& r : rows) t.add_row(r);
  out.tables.push_back(std::move(t));
  out.checks.push_back(check("median restricted MMLE non-increasing in n", non_increasing(med), med.back()));
  const double spread = *std::max_element(scaled.begin(), scaled.end()) / *std::min_element(scaled.begin(), scaled.end());
  out.checks.push_back(check("lambda_hat log n / log log n within a factor-" + io::format_double(p.num("band_factor")) +
                                 " band",
                             spread <= p.num("band_factor"), spread));

  // Small-n agreement of reweighting and enumeration on a coarse shared grid.
  const int n_small = p.integer("small_n");
  const auto coarse = log_grid(p.num("grid_lo"), p.num("grid_hi"), p.integer("small_grid_points"));
  const int reps_small = p.integer("small_datasets");
  auto st = table("small_n", {"dataset", "lambda", "log_ratio_enumeration", "log_ratio_reweighting", "stderr"});
  st.header = {"n: " + std::to_string(n_small)};
  int agree = 0;
  std::vector<std::vector<std::vector<double>>> blocks(reps_small);
  std::vector<int> matched(reps_small, 0);
  parallel_for(reps_small, ctx.threads, [&](int r) {
    const std::uint64_t seed = rep_seed(ctx.config, r, n_small);
    const auto data = simulate(f, truth, n_small, seed);
    MarginalStrategy en;
    en.kind = MarginalKind::Enumeration;
    const auto exact = mmle_grid(f, data, RestrictedDomain::points(coarse), en);
    const auto rw = mmle_grid(f, data, RestrictedDomain::points(coarse),
                              reweighting(p, p.integer("small_draws"), derive_seed(seed, {stream::chain})));
    const auto& c = f.constants();
    const auto prof = mixture_marginal_profile(data, coarse, p.num("lambda_ref"), c.K,
                                               {c.component_variance, c.location_prior_mean, c.location_prior_variance},
                                               p.integer("small_draws"), derive_seed(seed, {stream::chain}),
                                               p.integer("burnin"));
    const double ref = log_marginal_value(f, HyperParam::scalar("lambda", p.num("lambda_ref")), data, en);
    for (std::size_t i = 0; i < coarse.size(); ++i)
      blocks[r].push_back({double(r), coarse[i], exact.profile[i] - ref, rw.profile[i], prof[i].std_error});
    matched[r] = exact.lambda_hat[0] == rw.lambda_hat[0];
  });
  for (int r = 0; r < reps_small; ++r) {
    agree += matched[r];
    for (auto& row : blocks[r]) st.add_row(row);
  }
  out.tables.push_back(std::move(st));
  out.checks.push_back(check("reweighting argmax equals enumeration argmax at n=" + std::to_string(n_small),
                             agree == reps_small, agree));
  return out;
}

Outcome markov_sparsity(const Context& ctx) {
  const auto& p = ctx.params;
  const auto Pv = p.vec("P");
  const int K = static_cast<int>(std::lround(std::sqrt(double(Pv.size()))));
  if (K * K != static_cast<int>(Pv.size())) throw ValidationError("markov-sparsity: P must be square");
  Eigen::MatrixXd P(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) P(i, j) = Pv[i * K + j];
  const double lo = p.num("alpha_lower"), hi = p.num("alpha_upper");
  const auto f = ModelFamily::markov_dirichlet(K).with_alpha_box(lo, hi);
  const int n = p.integer("n");
  const double edge = p.num("edge_tolerance");
  Outcome out;
  auto t = table("results", {"seed", "row", "col", "count", "alpha_hat", "at_lower", "at_upper"});
  auto u = table("marginal_check", {"seed", "trial", "display", "dirichlet_multinomial", "abs_diff"});
  bool zeros_low = true, positive_interior = true;
  double worst = 0.0;
  for (int rep = 0; rep < ctx.config.seed_count; ++rep) {
    const std::uint64_t seed = rep_seed(ctx.config, rep, n);
    const auto data = simulate(f, ParamPoint::transition_matrix(P), n, seed);
    const auto res = mmle_continuous(f, data, RestrictedDomain::uniform_box(K * K, lo, hi), 1e-8, seed);
    const auto& Y = *data.counts;
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) {
        const double a = res.lambda_hat[i * K + j];
        const bool at_lo = a <= lo + edge * (hi - lo), at_hi = a >= hi - edge * (hi - lo);
        if (Y(i, j) == 0 && !at_lo) zeros_low = false;
        if (Y(i, j) > 0 && (at_lo || at_hi)) positive_interior = false;
        t.add_row({double(rep), double(i), double(j), double(Y(i, j)), a, double(at_lo), double(at_hi)});
      }
    Engine rng(derive_seed(seed, {stream::monte_carlo}));
    for (int trial = 0; trial < p.integer("formula_trials"); ++trial) {
      Eigen::VectorXd a(K * K);
      for (int k = 0; k < K * K; ++k) a(k) = std::exp(std::log(lo) + std::log(hi / lo) * random::uniform(rng));
      const double disp = log_marginal_value(f, make_hyper(f, a), data);
      Eigen::MatrixXd A(K, K);
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) A(i, j) = a(i * K + j);
      const double dm = markov_dirichlet_multinomial(Y, A);
      worst = std::max(worst, std::abs(disp - dm));
      u.add_row({double(rep), double(trial), disp, dm, std::abs(disp - dm)});
    }
  }
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(u));
  out.checks.push_back(check("zero-count cells at the lower box edge", zeros_low, 0.0));
  out.checks.push_back(check("positive-count cells interior to the box", positive_interior, 0.0));
  out.checks.push_back(check("u(y, lambda) equals the Dirichlet-multinomial form within 1e-10", worst <= 1e-10, worst));
  return out;
}

Outcome sampler_checks(const Context& ctx) {
  const auto& p = ctx.params;
  const std::uint64_t seed = rep_seed(ctx.config, 0, 0);
  Outcome out;

  // LASSO, one orthonormal column, known σ.
  const int n = p.integer("lasso_n");
  Engine rng(derive_seed(seed, {stream::design}));
  Eigen::MatrixXd X(n, 1);
  for (int i = 0; i < n; ++i) X(i, 0) = random::standard_normal(rng);
  X /= X.norm();
  const auto f = ModelFamily::bayes_lasso(LassoSigma::Fixed, p.num("lasso_sigma2")).with_design(X);
  const auto data = simulate(f, ParamPoint::scalar(p.num("lasso_beta0")), n, seed);
  const double lambda = p.num("lasso_lambda");
  GibbsConfig g;
  g.iters = p.integer("draws") + p.integer("burnin");
  g.burnin = p.integer("burnin");
  g.seed = derive_seed(seed, {stream::chain});
  const auto chain = gibbs_lasso(data, lambda, LassoSigma::Fixed, p.num("lasso_sigma2"), g);
  const auto closed = marginal(posterior(f, HyperParam::scalar("lambda", lambda), data), 0);
  WeightedSamples ws{chain.draws.col(0), Eigen::VectorXd::Ones(chain.draws.rows()), chain.seed};
  const double l1 = l1_distance(ws, closed);
  out.checks.push_back(check("LASSO Gibbs histogram L1 to closed-form marginal below threshold",
                             l1 < p.num("l1_threshold"), l1));
  const auto again = gibbs_lasso(data, lambda, LassoSigma::Fixed, p.num("lasso_sigma2"), g);

  // Mixture weights at small n against enumeration.
  const auto y = [&] {
    Engine r(derive_seed(seed, {stream::data, 7}));
    const auto locs = p.vec("mixture_locations");
    Eigen::VectorXd v(p.integer("mixture_n"));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = locs[i % locs.size()] + random::standard_normal(r);
    return v;
  }();
  const auto av = p.vec("mixture_alpha");
  const Eigen::VectorXd alpha = Eigen::Map<const Eigen::VectorXd>(av.data(), av.size());
  const mixture::NormalKnownVariance base{1.0, 0.0, p.num("mixture_prior_variance")};
  const auto en = mixture::enumerate_allocations(y, alpha, base);
  GibbsConfig gm = g;
  gm.seed = derive_seed(seed, {stream::chain, 2});
  const auto mc = gibbs_mixture(y, alpha, base, gm);
  const auto mc_again = gibbs_mixture(y, alpha, base, gm);
  const Eigen::VectorXd p1 = mc.draws.col(0);
  const double se = batch_means_stderr(p1);
  const double diff = std::abs(p1.mean() - en.posterior_mean_weights(0));
  out.checks.push_back(check("mixture Gibbs E[p1 | y] within 3 std-errors of enumeration", diff <= 3.0 * se,
                             diff / se));
  const bool same = chain.draws == again.draws && mc.draws == mc_again.draws;
  out.checks.push_back(check("chains bit-reproducible by seed", same, same));

  auto t = table("results", {"quantity", "estimate", "reference", "stderr"});
  t.header = {"quantity 0: L1(histogram, closed marginal), quantity 1: E[p1|y] Gibbs vs enumeration",
              "draws: " + std::to_string(p.integer("draws"))};
  t.add_row({0, l1, 0.0, std::nan("")});
  t.add_row({1, p1.mean(), en.posterior_mean_weights(0), se});
  out.tables.push_back(std::move(t));
  out.stats["lasso_ess"] = chain.ess(0);
  out.stats["mixture_ess_p1"] = mc.ess(0);
  if (!ctx.chain_dir.empty()) {
    io::write_chain_csv(chain, ctx.chain_dir + "/lasso.csv");
    io::write_chain_csv(mc, ctx.chain_dir + "/mixture.csv");
  }
  return out;
}

}  // namespace

std::vector<Definition> mixture_experiments() {
  const json mix = {{"K", 2},
                    {"component_variance", 1.0},
                    {"prior_mean", 0.0},
                    {"prior_variance", 1.0},
                    {"gamma0", 0.0},
                    {"lambda_ref", 0.5},
                    {"burnin", 1000}};
  json rate = mix;
  rate.update(json{{"n_grid", {100, 400, 1600}},
                   {"grid_lo", 0.025},
                   {"grid_hi", 0.5},
                   {"grid_points", 25},
                   {"draws", 20000},
                   {"band_factor", 10.0},
                   {"small_n", 8},
                   {"small_grid_points", 7},
                   {"small_draws", 50000},
                   {"small_datasets", 5}});
  return {
      {"mixture-rate", "Restricted MMLE of the Dirichlet concentration in an overfitted two-component mixture", rate,
       mixture_rate},
      {"markov-sparsity", "Per-cell Dirichlet MMLE for a Markov chain with structural zeros",
       {{"P", {0.6, 0.4, 0.0, 0.3, 0.5, 0.2, 0.0, 0.7, 0.3}},
        {"n", 2000},
        {"alpha_lower", 1e-3},
        {"alpha_upper", 50.0},
        {"edge_tolerance", 1e-6},
        {"formula_trials", 20}},
       markov_sparsity},
      {"sampler-checks", "Gibbs samplers against closed forms and enumeration",
       {{"lasso_n", 20},
        {"lasso_beta0", 1.0},
        {"lasso_sigma2", 1.0},
        {"lasso_lambda", 1.0},
        {"draws", 50000},
        {"burnin", 1000},
        {"l1_threshold", 0.05},
        {"mixture_n", 8},
        {"mixture_locations", {-2.0, 2.0, 2.0}},
        {"mixture_alpha", {0.7, 1.6}},
        {"mixture_prior_variance", 4.0}},
       sampler_checks},
  };
}

}  // namespace ebib::experiments::detail
