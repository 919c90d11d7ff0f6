// Experiments on the normal-mean family: densities, MMLE consistency, KL profile, merging.
#include <cmath>

#include "ebib/errors.hpp"
#include "ebib/kl.hpp"
#include "ebib/merging.hpp"
#include "ebib/mmle.hpp"
#include "ebib/models/models.hpp"
#include "ebib/rng.hpp"
#include "ebib/samplers.hpp"
#include "internal.hpp"

using nlohmann::json;

namespace ebib::experiments::detail {
namespace {

HyperParam lam(double v) { return HyperParam::scalar("lambda", v); }

double eb_lambda(const ModelFamily& f, const Dataset& data, double upper) {
  return mmle_continuous(f, data, RestrictedDomain::interval(0.0, upper)).lambda_hat[0];
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

Outcome fig1(const Context& ctx) {
  const auto& p = ctx.params;
  const auto f = ModelFamily::normal_mean(p.num("sigma2"));
  const double theta0 = p.num("theta0");
  const int n = p.integer("n");
  const auto grid = linear_grid(p.num("x_lo"), p.num("x_hi"), p.integer("x_points"));
  const auto lambdas = p.vec("lambdas");
  Outcome out;
  double worst = 0.0, worst_closed = 0.0;
  for (int rep = 0; rep < ctx.config.seed_count; ++rep) {
    const auto data = simulate(f, ParamPoint::scalar(theta0), n, rep_seed(ctx.config, rep, n));
    const double eb = eb_lambda(f, data, p.num("lambda_upper"));
    worst_closed = std::max(worst_closed, std::abs(eb - normal_mean_mmle_closed_form(data, f.constants().sigma2)));
    std::vector<PosteriorRep> reps{posterior(f, lam(eb), data)};
    std::string legend = "dens_1: EB lambda=" + io::format_double(eb);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      reps.push_back(posterior(f, lam(lambdas[k]), data));
      legend += ", dens_" + std::to_string(k + 2) + ": Bayes lambda=" + io::format_double(lambdas[k]);
    }
    auto t = emit_density_curves(reps, grid);
    t.name = "densities_seed" + std::to_string(rep);
    t.header = {"n: " + std::to_string(n), "seed: " + std::to_string(rep), legend};
    for (std::size_t k = 1; k < t.columns.size(); ++k) {
      std::vector<double> col;
      for (const auto& r : t.rows) col.push_back(r[k]);
      worst = std::max(worst, std::abs(trapezoid(grid, col) - 1.0));
    }
    out.tables.push_back(std::move(t));
  }
  out.checks.push_back(check("columns integrate to 1 within 1e-4", worst <= 1e-4, worst));
  out.checks.push_back(check("numeric MMLE equals closed form within 1e-6", worst_closed <= 1e-6, worst_closed));
  return out;
}

Outcome mmle_consistency(const Context& ctx) {
  const auto& p = ctx.params;
  const auto f = ModelFamily::normal_mean(p.num("sigma2"));
  const auto theta0 = ParamPoint::scalar(p.num("theta0"));
  const double star = oracle_hyperparameter(f, theta0)[0];
  const auto ns = p.ints("n_grid");
  const int S = ctx.config.seed_count;
  std::vector<std::vector<double>> rows(ns.size() * S);
  parallel_for(static_cast<int>(rows.size()), ctx.threads, [&](int k) {
    const int n = ns[k / S], rep = k % S;
    const auto data = simulate(f, theta0, n, rep_seed(ctx.config, rep, n));
    const double hat = eb_lambda(f, data, p.num("lambda_upper"));
    const double closed = normal_mean_mmle_closed_form(data, f.constants().sigma2);
    rows[k] = {double(n), double(rep), hat, closed, std::abs(hat - star)};
  });
  Outcome out;
  auto t = table("results", {"n", "seed", "lambda_hat", "lambda_closed", "abs_error"});
  t.header = {"lambda_star: " + io::format_double(star)};
  std::vector<double> med;
  double gap = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    std::vector<double> errs;
    for (int r = 0; r < S; ++r) {
      const auto& row = rows[i * S + r];
      errs.push_back(row[4]);
      gap = std::max(gap, std::abs(row[2] - row[3]));
    }
    med.push_back(median(errs));
    out.stats["median_abs_error"][std::to_string(ns[i])] = med.back();
  }
  for (auto& r : rows) t.add_row(r);
  out.tables.push_back(std::move(t));
  out.checks.push_back(check("median |lambda_hat - lambda*| strictly decreasing in n", strictly_decreasing(med),
                             med.back()));
  out.checks.push_back(check("median error at largest n below " + io::format_double(p.num("final_tolerance")),
                             med.back() < p.num("final_tolerance"), med.back()));
  out.checks.push_back(check("numeric MMLE equals closed form within 1e-4", gap <= 1e-4, gap));
  return out;
}

Outcome kl_oracle(const Context& ctx) {
  const auto& p = ctx.params;
  const auto f = ModelFamily::normal_mean(p.num("sigma2"));
  const auto theta0 = ParamPoint::scalar(p.num("theta0"));
  const double star = oracle_hyperparameter(f, theta0)[0];
  const auto grid = log_grid(p.num("grid_lo"), p.num("grid_hi"), p.integer("grid_points"));
  const KlProfile prof = kl_minimizer(f, theta0, p.integer("n"), grid, {});
  Outcome out;
  auto t = table("kl_profile", {"lambda", "kl", "stderr"});
  t.header = {"n: " + std::to_string(p.integer("n")), "lambda_star: " + io::format_double(star)};
  for (std::size_t i = 0; i < grid.size(); ++i) t.add_row({grid[i], prof.values[i], prof.std_errors[i]});
  out.tables.push_back(std::move(t));

  std::size_t imin = 0, istar = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] == prof.minimizer[0]) imin = i;
    if (std::abs(std::log(grid[i] / star)) < std::abs(std::log(grid[istar] / star))) istar = i;
  }
  const double steps = std::abs(double(imin) - double(istar));
  out.checks.push_back(check("exact-KL minimizer within one grid step of lambda*", steps <= 1.0, prof.minimizer[0]));
  out.checks.push_back(check("minimum KL positive", prof.min_value > 0.0, prof.min_value));

  // Monte Carlo against closed form on random configurations.
  const int configs = p.integer("mc_configs"), reps = p.integer("mc_reps");
  std::vector<std::vector<double>> rows(configs);
  parallel_for(configs, ctx.threads, [&](int i) {
    Engine rng(derive_seed(ctx.config.seed_base, {std::uint64_t(i), stream::monte_carlo}));
    const double th = -3.0 + 6.0 * random::uniform(rng);
    const double l = std::exp(std::log(0.1) + std::log(100.0) * random::uniform(rng));
    const double s2 = 0.5 + 1.5 * random::uniform(rng);
    const int n = 5 + static_cast<int>(96 * random::uniform(rng));
    const auto g = ModelFamily::normal_mean(s2);
    const double exact = kl_exact_gaussian(g, ParamPoint::scalar(th), lam(l), n);
    const auto mc = kl_monte_carlo(g, ParamPoint::scalar(th), lam(l), n, reps,
                                   derive_seed(ctx.config.seed_base, {std::uint64_t(i), stream::data}));
    const bool within = std::abs(mc.value - exact) <= 3.0 * mc.std_error;
    rows[i] = {double(i), th, l, s2, double(n), exact, mc.value, mc.std_error, within ? 1.0 : 0.0};
  });
  auto mct = table("kl_monte_carlo", {"config", "theta0", "lambda", "sigma2", "n", "kl_exact", "kl_mc", "stderr",
                                      "within_3se"});
  mct.header = {"reps: " + std::to_string(reps)};
  double hits = 0.0;
  for (auto& r : rows) {
    hits += r.back();
    mct.add_row(r);
  }
  out.tables.push_back(std::move(mct));
  const double frac = hits / configs;
  out.checks.push_back(check("Monte Carlo KL within 3 std-errors in at least 95% of configurations",
                             frac >= p.num("mc_coverage"), frac));
  out.stats["minimizer"] = prof.minimizer[0];
  out.stats["min_kl"] = prof.min_value;
  return out;
}

Outcome merging_rates(const Context& ctx) {
  const auto& p = ctx.params;
  const auto f = ModelFamily::normal_mean(p.num("sigma2"));
  const auto theta0 = ParamPoint::scalar(p.num("theta0"));
  const auto l1 = lam(p.num("lambda1")), l2 = lam(p.num("lambda2"));
  const auto ns = p.ints("n_grid");
  const int S = ctx.config.seed_count;
  std::vector<std::vector<double>> rows(ns.size() * S);
  parallel_for(static_cast<int>(rows.size()), ctx.threads, [&](int k) {
    const int n = ns[k / S], rep = k % S;
    const auto data = simulate(f, theta0, n, rep_seed(ctx.config, rep, n));
    const double exact = l1_distance(posterior(f, l1, data), posterior(f, l2, data));
    const double pred = predicted_l1_posterior(f, theta0, l1, l2, n);
    const double cd = credible_discrepancy(f, data, l1, l2, p.num("alpha"));
    rows[k] = {double(n), double(rep), l1[0], l2[0], exact, pred, cd};
  });
  Outcome out;
  auto t = table("results", {"n", "seed", "lambda1", "lambda2", "l1_exact", "l1_pred", "cred_disc"});
  std::vector<double> scaled_gap;
  double ratio_last = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    std::vector<double> gaps, ratios;
    for (int r = 0; r < S; ++r) {
      const auto& row = rows[i * S + r];
      gaps.push_back(std::sqrt(double(ns[i])) * std::abs(row[4] - row[5]));
      ratios.push_back(row[4] / row[5]);
    }
    scaled_gap.push_back(median(gaps));
    ratio_last = median(ratios);
    const auto key = std::to_string(ns[i]);
    out.stats["median_ratio"][key] = ratio_last;
    out.stats["median_scaled_gap"][key] = scaled_gap.back();
  }
  for (auto& r : rows) t.add_row(r);
  out.tables.push_back(std::move(t));
  const auto band = p.vec("ratio_band");
  out.checks.push_back(check("median exact/predicted at largest n inside band",
                             ratio_last >= band.at(0) && ratio_last <= band.at(1), ratio_last));
  out.checks.push_back(check("median sqrt(n)|exact - predicted| strictly decreasing", strictly_decreasing(scaled_gap),
                             scaled_gap.back()));
  return out;
}

Outcome predictive_rates(const Context& ctx) {
  const auto& p = ctx.params;
  const auto f = ModelFamily::normal_mean(p.num("sigma2"));
  const auto theta0 = ParamPoint::scalar(p.num("theta0"));
  const auto star = oracle_hyperparameter(f, theta0);
  const auto fixed = lam(p.num("lambda_fixed"));
  const auto ns = p.ints("n_grid");
  const int S = ctx.config.seed_count;
  std::vector<std::vector<double>> rows(ns.size() * S);
  parallel_for(static_cast<int>(rows.size()), ctx.threads, [&](int k) {
    const int n = ns[k / S], rep = k % S;
    const auto data = simulate(f, theta0, n, rep_seed(ctx.config, rep, n));
    const auto eb = lam(eb_lambda(f, data, p.num("lambda_upper")));
    const auto oracle_post = posterior(f, star, data);
    const double post = l1_distance(posterior(f, eb, data), oracle_post);
    const double pred = l1_distance(predictive(f, eb, data), predictive(f, star, data));
    const double post_fixed = l1_distance(posterior(f, fixed, data), oracle_post);
    const double rn = std::sqrt(double(n));
    rows[k] = {double(n), double(rep), eb[0], post, pred, rn * post, n * pred, rn * post_fixed};
  });
  Outcome out;
  auto t = table("results", {"n", "seed", "lambda_hat", "l1_post", "l1_pred", "scaled_post", "scaled_pred",
                             "scaled_post_fixed"});
  t.header = {"lambda_star: " + io::format_double(star[0]), "lambda_fixed: " + io::format_double(fixed[0])};
  std::vector<double> mp, mq;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    std::vector<double> a, b, c;
    for (int r = 0; r < S; ++r) {
      a.push_back(rows[i * S + r][5]);
      b.push_back(rows[i * S + r][6]);
      c.push_back(rows[i * S + r][7]);
    }
    mp.push_back(median(a));
    mq.push_back(median(b));
    const auto key = std::to_string(ns[i]);
    out.stats["median_scaled_post"][key] = mp.back();
    out.stats["median_scaled_pred"][key] = mq.back();
    out.stats["median_scaled_post_fixed"][key] = median(c);
  }
  for (auto& r : rows) t.add_row(r);
  out.tables.push_back(std::move(t));
  out.checks.push_back(check("median sqrt(n) L1(EB, oracle posterior) strictly decreasing", strictly_decreasing(mp),
                             mp.back()));
  out.checks.push_back(check("median n L1(EB, oracle predictive) strictly decreasing", strictly_decreasing(mq),
                             mq.back()));
  return out;
}

Outcome credible(const Context& ctx) {
  const auto& p = ctx.params;
  const auto f = ModelFamily::normal_mean(p.num("sigma2"));
  const auto theta0 = ParamPoint::scalar(p.num("theta0"));
  const auto star = oracle_hyperparameter(f, theta0);
  const auto far = lam(p.num("lambda_far"));
  const double alpha = p.num("alpha");
  const auto ns = p.ints("n_grid");
  const int S = ctx.config.seed_count;
  std::vector<std::vector<double>> rows(ns.size() * S);
  parallel_for(static_cast<int>(rows.size()), ctx.threads, [&](int k) {
    const int n = ns[k / S], rep = k % S;
    const auto data = simulate(f, theta0, n, rep_seed(ctx.config, rep, n));
    const auto eb = lam(eb_lambda(f, data, p.num("lambda_upper")));
    const double d_star = credible_discrepancy(f, data, eb, star, alpha);
    const double d_far = credible_discrepancy(f, data, eb, far, alpha);
    const double rn = std::sqrt(double(n));
    rows[k] = {double(n), double(rep), eb[0], d_star, d_far, rn * std::abs(d_star), rn * std::abs(d_far)};
  });
  Outcome out;
  auto t = table("results",
                 {"n", "seed", "lambda_hat", "disc_oracle", "disc_far", "scaled_oracle", "scaled_far"});
  t.header = {"alpha: " + io::format_double(alpha), "lambda_star: " + io::format_double(star[0]),
              "lambda_far: " + io::format_double(far[0])};
  std::vector<double> mo, mf;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    std::vector<double> a, b;
    for (int r = 0; r < S; ++r) {
      a.push_back(rows[i * S + r][5]);
      b.push_back(rows[i * S + r][6]);
    }
    mo.push_back(median(a));
    mf.push_back(median(b));
    const auto key = std::to_string(ns[i]);
    out.stats["median_scaled_oracle"][key] = mo.back();
    out.stats["median_scaled_far"][key] = mf.back();
  }
  for (auto& r : rows) t.add_row(r);
  out.tables.push_back(std::move(t));
  out.checks.push_back(check("median sqrt(n)|discrepancy| under lambda* strictly decreasing", strictly_decreasing(mo),
                             mo.back()));
  out.checks.push_back(check("fixed-lambda curve above oracle curve at largest n", mf.back() > mo.back(),
                             mf.back() - mo.back()));
  return out;
}

}  // namespace

std::vector<Definition> normal_mean_experiments() {
  const json base = {{"theta0", 2.0}, {"sigma2", 1.0}, {"lambda_upper", 100.0}};
  auto with = [&](json extra) {
    json j = base;
    j.update(extra);
    return j;
  };
  return {
      {"fig1-densities", "EB and fixed-lambda posterior density curves for the normal mean",
       with({{"n", 30}, {"lambdas", {1.0, 4.0}}, {"x_lo", 0.5}, {"x_hi", 3.5}, {"x_points", 601}}), fig1},
      {"mmle-consistency", "MMLE of the normal-mean prior variance approaching the oracle as n grows",
       with({{"n_grid", {100, 1000, 10000}}, {"final_tolerance", 0.3}}), mmle_consistency},
      {"kl-oracle", "KL(p_theta0 || m_lambda) profile and Monte Carlo KL agreement",
       with({{"n", 5000},
             {"grid_lo", 0.04},
             {"grid_hi", 400.0},
             {"grid_points", 161},
             {"mc_configs", 100},
             {"mc_reps", 200},
             {"mc_coverage", 0.95}}),
       kl_oracle},
      {"merging-rates", "Exact posterior L1 between two priors against the first-order prediction",
       with({{"lambda1", 1.0}, {"lambda2", 4.0}, {"n_grid", {50, 200, 800}}, {"ratio_band", {0.9, 1.1}},
             {"alpha", 0.05}}),
       merging_rates},
      {"predictive-rates", "EB versus oracle posterior and predictive L1 rates",
       with({{"n_grid", {50, 200, 800}}, {"lambda_fixed", 1.0}}), predictive_rates},
      {"credible-discrepancy", "Mass of EB credible intervals under the oracle and a fixed prior",
       with({{"n_grid", {50, 200, 800}}, {"alpha", 0.05}, {"lambda_far", 20.0}}), credible},
  };
}

}  // namespace ebib::experiments::detail
