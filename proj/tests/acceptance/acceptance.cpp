// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failed criteria (capped at 125).
//
//   acceptance --criteria 1-10 --work <dir>
//   acceptance --criteria 11-13 --work <dir>
//
// Criteria 11-13 reuse <work>/dgp1 and <work>/dgp2 when they already hold a
// study with the reference configuration; otherwise they run the CLI.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pbpolicy/bounds.hpp"
#include "pbpolicy/core_data.hpp"
#include "pbpolicy/dgp.hpp"
#include "pbpolicy/error.hpp"
#include "pbpolicy/gibbs_posterior.hpp"
#include "pbpolicy/harness.hpp"
#include "pbpolicy/oracle.hpp"
#include "pbpolicy/policy_rules.hpp"
#include "pbpolicy/rng.hpp"
#include "pbpolicy/smc.hpp"

namespace fs = std::filesystem;
using namespace pbpolicy;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double normal(Stream& s) {
  const double u1 = 1.0 - uniform01(s);
  const double u2 = uniform01(s);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t uniform_int(Stream& s, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform01(s) * static_cast<double>(hi - lo + 1));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

// ---------------------------------------------------------------------------
// Finite-grid problems

struct GridProblem {
  std::size_t q = 0;
  std::vector<std::vector<double>> grid;
  std::vector<double> masses;
  IPWScores scores;
  FeatureMatrix features;
  FeatureMatrix queries;
  double lambda = 1.0;
  double u = 0.0;
};

constexpr double kMinMargin = 1e-4;

bool margins_ok(const GridProblem& p, const FeatureMatrix& m) {
  std::vector<double> phi(p.q);
  for (std::size_t i = 0; i < m.observations(); ++i) {
    for (std::size_t j = 0; j < p.q; ++j) phi[j] = m.at(i, j);
    for (const auto& th : p.grid)
      if (std::abs(dot(phi, th)) < kMinMargin) return false;
  }
  return true;
}

// |grid| <= 50, q <= 4, n <= 100; every grid point clears every data and
// query point by kMinMargin so the mixture-embedded prior is exactly discrete.
GridProblem random_grid_problem(std::uint64_t seed, std::size_t max_grid) {
  Stream s(seed);
  for (;;) {
    GridProblem p;
    p.q = uniform_int(s, 2, 4);
    const std::size_t n = uniform_int(s, 40, 100);
    const std::size_t g = uniform_int(s, 5, max_grid);
    p.features = FeatureMatrix(p.q, n);
    p.queries = FeatureMatrix(p.q, 10);
    for (std::size_t i = 0; i < n; ++i) {
      p.features.at(i, 0) = 1.0;
      for (std::size_t j = 1; j < p.q; ++j) p.features.at(i, j) = normal(s);
    }
    for (std::size_t i = 0; i < 10; ++i) {
      p.queries.at(i, 0) = 1.0;
      for (std::size_t j = 1; j < p.q; ++j) p.queries.at(i, j) = normal(s);
    }
    for (std::size_t k = 0; k < g; ++k) {
      std::vector<double> th(p.q);
      for (auto& v : th) v = normal(s);
      p.grid.push_back(std::move(th));
      p.masses.push_back(0.1 + uniform01(s));
    }
    p.scores.delta_y.resize(n);
    p.scores.delta_c.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.scores.delta_y[i] = 2.0 * uniform01(s) - 1.0;
      p.scores.delta_c[i] = -0.2 + 1.2 * uniform01(s);
    }
    p.scores.mean_delta_y =
        std::accumulate(p.scores.delta_y.begin(), p.scores.delta_y.end(), 0.0) / static_cast<double>(n);
    p.lambda = 1.0 + 19.0 * uniform01(s);
    p.u = 2.0 * uniform01(s);
    if (margins_ok(p, p.features) && margins_ok(p, p.queries)) return p;
  }
}

struct GridFunctionals {
  std::vector<double> welfare, cost, masses;
};

GridFunctionals functionals(const GridProblem& p) {
  GridFunctionals f;
  for (const auto& th : p.grid) {
    const WelfareCost wc = empirical_welfare_cost(th, p.scores, p.features);
    f.welfare.push_back(wc.welfare);
    f.cost.push_back(wc.cost);
  }
  const double total = std::accumulate(p.masses.begin(), p.masses.end(), 0.0);
  for (double m : p.masses) f.masses.push_back(m / total);
  return f;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::size_t kProblems = 25;
  constexpr std::size_t kParticles = 4000;
  const double tol = 3.0 / std::sqrt(static_cast<double>(kParticles));
  double worst_prob = 0.0, worst_cost = 0.0;
  for (std::size_t k = 0; k < kProblems; ++k) {
    const GridProblem p = random_grid_problem(derive_seed(101, {k}), 50);
    const GibbsParams params{p.lambda, p.u, false};
    const GridPosterior exact = grid_posterior(p.grid, functionals(p).masses, params, p.scores, p.features);

    MixturePrior prior(p.grid, p.masses, 1e-6);
    const TemperatureLadder ladder = build_default_ladder(p.u, p.lambda);
    SMCConfig cfg;
    cfg.n_particles = kParticles;
    cfg.normalized = false;
    cfg.seed = derive_seed(202, {k});
    const SMCResult res = run_smc(p.scores, p.features, prior, ladder, cfg);
    const WeightedParticles& parts = res.checkpoints.at(ladder.final_step());

    const std::vector<double> shares = vote_shares(parts, p.queries);
    std::vector<double> phi(p.q);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < p.q; ++j) phi[j] = p.queries.at(i, j);
      double truth = 0.0;
      for (std::size_t g = 0; g < p.grid.size(); ++g)
        if (dot(phi, p.grid[g]) > 0.0) truth += exact.probabilities[g];
      worst_prob = std::max(worst_prob, std::abs(shares[i] - truth));
    }
    worst_cost = std::max(worst_cost, std::abs(particle_average_cost(parts, p.scores, p.features) - exact.expected_cost()));
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_prob <= tol && worst_cost <= tol && secs < 120.0;
  return {pass, fmt("max |treat prob err| = %.4f", worst_prob) + fmt(", max |cost err| = %.4f", worst_cost) +
                    fmt(", tol = %.4f", tol) + fmt(", runtime %.1fs (limit 120s)", secs)};
}

Outcome criterion2() {
  std::size_t checked = 0, violations = 0;
  double worst_rise = -std::numeric_limits<double>::infinity();
  double worst_deriv = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < 25; ++k) {
    const GridProblem p = random_grid_problem(derive_seed(303, {k}), 50);
    const GridFunctionals f = functionals(p);
    const auto [lo, hi] = std::minmax_element(f.cost.begin(), f.cost.end());
    if (*hi - *lo <= 0.0) continue;  // degenerate costs
    ++checked;
    const BudgetEvaluator eval = grid_budget_evaluator(f.welfare, f.cost, f.masses, false, p.scores.mean_delta_y);
    double prev = eval(p.lambda, 0.0);
    for (int j = 0; j <= 100; ++j) {
      const double u = 0.05 * j;
      const GibbsParams params{p.lambda, u, false};
      const GridPosterior g = grid_posterior(f.welfare, f.cost, f.masses, params, p.scores.mean_delta_y);
      const double d = grid_budget_derivative(g, params, p.scores.mean_delta_y);
      worst_deriv = std::max(worst_deriv, d);
      if (!(d < 0.0)) ++violations;
      if (j > 0) {
        const double cur = eval(p.lambda, u);
        worst_rise = std::max(worst_rise, cur - prev);
        if (!(cur - prev <= 1e-12)) ++violations;
        prev = cur;
      }
    }
  }
  return {violations == 0 && checked > 0,
          std::to_string(checked) + " problems, 101 u values each; " + std::to_string(violations) +
              " violations; max step change " + fmt("%.3g", worst_rise) + ", max derivative " +
              fmt("%.3g", worst_deriv)};
}

Outcome criterion3() {
  std::size_t slack = 0, binding = 0, failures = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < 25; ++k) {
    const GridProblem p = random_grid_problem(derive_seed(404, {k}), 50);
    const GridFunctionals f = functionals(p);
    const BudgetEvaluator eval = grid_budget_evaluator(f.welfare, f.cost, f.masses, false, p.scores.mean_delta_y);
    const double kmin = *std::min_element(f.cost.begin(), f.cost.end());
    const double l0 = eval(p.lambda, 0.0);
    Stream s(derive_seed(405, {k}));
    const double lo = kmin + 1e-3;
    const double budget = lo + (l0 + 0.2 - lo) * uniform01(s);
    const double u_hat = solve_u_hat(budget, p.lambda, eval);
    if (u_hat == 0.0) {
      ++slack;
      if (!(l0 <= budget)) ++failures;
    } else {
      ++binding;
      const double gap = std::abs(eval(p.lambda, u_hat) - budget);
      worst = std::max(worst, gap);
      if (!(gap <= 1e-8)) ++failures;
    }
  }
  return {failures == 0, std::to_string(slack) + " slack, " + std::to_string(binding) + " binding; " +
                             std::to_string(failures) + " failures; max |Lambda(u_hat) - B| = " + fmt("%.3g", worst)};
}

double kl_divergence(std::span<const double> rho, std::span<const double> pi) {
  double s = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k)
    if (rho[k] > 0.0) s += rho[k] * std::log(rho[k] / pi[k]);
  return s;
}

Outcome criterion4() {
  constexpr std::size_t kProblems = 25;
  constexpr std::size_t kCandidates = 10000;
  double worst = std::numeric_limits<double>::infinity();
  std::size_t evaluated = 0;
  for (std::size_t k = 0; k < kProblems; ++k) {
    const GridProblem p = random_grid_problem(derive_seed(505, {k}), 20);
    const GridFunctionals f = functionals(p);
    Stream us(derive_seed(506, {k}));
    const double u = 0.1 + 1.9 * uniform01(us);
    const GibbsParams params{p.lambda, u, false};
    const GridPosterior hat = grid_posterior(f.welfare, f.cost, f.masses, params, p.scores.mean_delta_y);
    const std::vector<double>& rho_hat = hat.probabilities;
    const std::size_t g = rho_hat.size();
    const double budget = hat.expected_cost();
    const std::size_t kmin = static_cast<std::size_t>(std::min_element(f.cost.begin(), f.cost.end()) - f.cost.begin());

    auto objective = [&](std::span<const double> rho) {
      double w = 0.0;
      for (std::size_t j = 0; j < g; ++j) w += rho[j] * f.welfare[j];
      return -w + kl_divergence(rho, f.masses) / p.lambda;
    };
    const double best = objective(rho_hat);

    Stream s(derive_seed(507, {k}));
    std::vector<double> rho(g);
    for (std::size_t c = 0; c < kCandidates; ++c) {
      const int kind = static_cast<int>(c % 3);
      if (kind == 0) {  // Dirichlet(1)
        for (auto& v : rho) v = -std::log(1.0 - uniform01(s));
      } else if (kind == 1) {  // sparse Dirichlet
        for (auto& v : rho) v = uniform01(s) < 0.5 ? 0.0 : -std::log(1.0 - uniform01(s));
        rho[uniform_int(s, 0, g - 1)] += 1.0;
      } else {  // multiplicative perturbation of the posterior
        const double scale = std::pow(10.0, -3.0 + 3.0 * uniform01(s));
        for (std::size_t j = 0; j < g; ++j) rho[j] = rho_hat[j] * std::exp(scale * normal(s));
      }
      const double total = std::accumulate(rho.begin(), rho.end(), 0.0);
      for (auto& v : rho) v /= total;
      double cost = 0.0;
      for (std::size_t j = 0; j < g; ++j) cost += rho[j] * f.cost[j];
      if (cost > budget) {
        // Shift mass onto the cheapest point until the budget binds.
        const double t = (cost - budget) / (cost - f.cost[kmin]);
        for (auto& v : rho) v *= (1.0 - t);
        rho[kmin] += t;
        cost = 0.0;
        for (std::size_t j = 0; j < g; ++j) cost += rho[j] * f.cost[j];
        if (cost > budget + 1e-12) continue;
      }
      ++evaluated;
      worst = std::min(worst, objective(rho) - best);
    }
  }
  return {worst >= -1e-10 && evaluated >= kCandidates,
          std::to_string(evaluated) + " feasible candidates over " + std::to_string(kProblems) +
              " grids; min objective margin = " + fmt("%.3g", worst) + " (limit -1e-10)"};
}

Outcome criterion5() {
  std::size_t monotone_violations = 0, budget_checks = 0, budget_failures = 0;
  double worst_gap = 0.0;
  for (std::size_t k = 0; k < 10; ++k) {
    Stream s(derive_seed(606, {k}));
    const double a0 = normal(s) * 0.5, a1 = normal(s), a2 = normal(s), a3 = normal(s);
    const double b0 = -0.5 + normal(s) * 0.3, b1 = normal(s) * 0.5, b2 = normal(s) * 0.5;
    const ConditionalFn cate = [=](std::span<const double> x) {
      return a0 + a1 * x[0] + a2 * x[1] + a3 * std::sin(2.0 * x[0] * x[1]);
    };
    const ConditionalFn catc = [=](std::span<const double> x) { return std::exp(b0 + b1 * x[0] + b2 * x[1]); };
    std::vector<std::vector<double>> xs(10000, std::vector<double>(2));
    for (auto& x : xs)
      for (auto& v : x) v = normal(s);
    const OraclePopulation pop = make_oracle_population(xs, cate, catc);

    double max_ratio = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) max_ratio = std::max(max_ratio, pop.delta_y[i] / pop.delta_c[i]);
    double prev = budget_curve_beta(0.0, pop);
    for (int j = 1; j <= 400; ++j) {
      const double cur = budget_curve_beta(1.1 * max_ratio * j / 400.0, pop);
      if (cur > prev) ++monotone_violations;
      prev = cur;
    }
    const double beta0 = budget_curve_beta(0.0, pop);
    for (int r = 0; r < 5; ++r) {
      const double budget = beta0 * (0.05 + 0.9 * uniform01(s));
      const OptimalRule rule = solve_eta_B(budget, pop);
      const std::vector<double> f = optimal_rule_values(rule, pop);
      double cost = 0.0;
      for (std::size_t i = 0; i < pop.size(); ++i) cost += pop.delta_c[i] * f[i];
      cost /= static_cast<double>(pop.size());
      const double gap = std::abs(cost - budget);
      worst_gap = std::max(worst_gap, gap);
      ++budget_checks;
      if (!(gap <= 1e-6) || !rule.constrained) ++budget_failures;
    }
  }
  return {monotone_violations == 0 && budget_failures == 0,
          std::to_string(monotone_violations) + " beta increases on 10x400 grid steps; " +
              std::to_string(budget_failures) + "/" + std::to_string(budget_checks) +
              " budget failures, max |K(f*_B) - B| = " + fmt("%.3g", worst_gap)};
}

Outcome criterion6() {
  const SimulatedPopulation test = generate({DgpId::dgp1, 9001, 10000});
  const OraclePopulation pop = test.oracle();
  const auto test_x = test.covariates();
  const double m = static_cast<double>(pop.size());
  std::size_t failures = 0;
  double worst_z = -std::numeric_limits<double>::infinity();
  std::ostringstream per_fit;
  for (std::size_t k = 0; k < 10; ++k) {
    const SimulatedPopulation train = generate({DgpId::dgp1, 7000 + k, 500});
    FeatureMap map = FeatureMap::polynomial(2, dgp_covariate_dim(DgpId::dgp1));
    const auto xs = train.covariates();
    map.fit_normalization(xs);
    const FitData data = prepare_fit_data(train.sample, map);
    IsotropicNormalPrior prior(map.dimension(), 1.0);
    const double u = 0.4 * static_cast<double>(k);
    const TemperatureLadder ladder = build_default_ladder(u, 64.0);
    SMCConfig cfg;
    cfg.n_particles = 500;
    cfg.seed = derive_seed(6006, {k});
    const SMCResult res = run_smc(data.scores, data.features, prior, ladder, cfg);
    const GibbsRule rule(res.checkpoints.at(ladder.final_step()), map);
    const std::vector<double> f_g = rule.treat_probabilities(test_x);
    const std::vector<double> f_mv = mv_values(f_g);

    double budget = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) budget += pop.delta_c[i] * f_g[i];
    budget /= m;
    const OptimalRule opt = solve_eta_B(budget, pop);
    const std::vector<double> f_star = optimal_rule_values(opt, pop);
    const double l_mv = mv_loss_L_B(f_mv, opt, pop);
    const double r_g = regret_under_budget(f_g, opt, pop);

    double s = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      const double d = (pop.delta_y[i] - opt.eta * pop.delta_c[i]) * (f_star[i] - f_mv[i]) -
                       2.0 * pop.delta_y[i] * (f_star[i] - f_g[i]);
      s += d;
      ss += d * d;
    }
    const double mean = s / m;
    const double se = std::sqrt(std::max(0.0, (ss - m * mean * mean) / (m - 1.0)) / m);
    const double diff = l_mv - 2.0 * r_g;
    if (!(diff <= 3.0 * se)) ++failures;
    if (se > 0.0) worst_z = std::max(worst_z, diff / se);
    per_fit << (k ? " " : "") << fmt("%.4f", diff);
  }
  return {failures == 0, std::to_string(failures) + "/10 fits violate L_B(f_mv) <= 2 R_B(f_G) + 3 SE; " +
                             "max (L - 2R)/SE = " + fmt("%.3g", worst_z) + "; L - 2R per fit: " + per_fit.str()};
}

Outcome criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::size_t kReps = 200;
  constexpr std::size_t kN = 200;
  constexpr double kEps = 0.1;
  constexpr double kKappa = 0.5;
  constexpr double kMc = 2.0;  // C1 in [0.1, 1.0]

  // Ten equally likely covariate values and 24 threshold rules on phi = (1, x).
  std::vector<double> support;
  for (int j = 0; j < 10; ++j) support.push_back(-0.9 + 0.2 * j);
  auto mean_cost = [](double x) { return 0.3 + 0.25 * (x + 1.0); };
  std::vector<std::vector<double>> grid;
  for (int k = 0; k < 12; ++k) {
    const double t = -1.1 + 0.2 * k;
    grid.push_back({-t, 1.0});
    grid.push_back({t, -1.0});
  }
  const std::size_t g = grid.size();
  const double log_pi = -std::log(static_cast<double>(g));
  std::vector<double> true_cost(g, 0.0);
  for (std::size_t k = 0; k < g; ++k) {
    for (double x : support)
      if (grid[k][0] + grid[k][1] * x > 0.0) true_cost[k] += mean_cost(x);
    true_cost[k] /= static_cast<double>(support.size());
  }

  BoundInputs in;
  in.n = kN;
  in.kappa = kKappa;
  in.m_y = 2.0;
  in.m_c = kMc;
  in.epsilon = kEps;
  in.lambda = std::sqrt(8.0 * kN * kKappa * kKappa * std::log(1.0 / kEps)) / kMc;
  const double slack = thm41a_slack(in, 0.0, LossKind::cost);

  std::size_t violations[2] = {0, 0};
  for (std::size_t r = 0; r < kReps; ++r) {
    Stream s(derive_seed(707, {r}));
    std::vector<Observation> obs(kN);
    for (auto& o : obs) {
      const double x = support[uniform_int(s, 0, support.size() - 1)];
      o.d = uniform01(s) < 0.5 ? 1 : 0;
      const double c1 = mean_cost(x) + 0.4 * uniform01(s) - 0.2;
      o.c = o.d ? c1 : 0.0;
      o.y = 0.0;
      o.x = {x};
    }
    const Sample sample = make_sample(std::move(obs), 0.5, kKappa);
    const IPWScores scores = ipw_transform(sample);
    FeatureMatrix features(2, kN);
    for (std::size_t i = 0; i < kN; ++i) {
      features.at(i, 0) = 1.0;
      features.at(i, 1) = sample.observations[i].x[0];
    }
    std::vector<double> gap(g);
    for (std::size_t k = 0; k < g; ++k) gap[k] = empirical_cost(LinearPolicy{grid[k]}, scores, features) - true_cost[k];

    for (int side = 0; side < 2; ++side) {
      const double sgn = side == 0 ? 1.0 : -1.0;
      // The worst-case rho is the tilted prior pi exp(lambda s gap).
      std::vector<double> logw(g), rho(g), pi(g, std::exp(log_pi));
      for (std::size_t k = 0; k < g; ++k) logw[k] = log_pi + in.lambda * sgn * gap[k];
      normalize_log_weights(logw, rho);
      double lhs = 0.0;
      for (std::size_t k = 0; k < g; ++k) lhs += rho[k] * sgn * gap[k];
      const double rhs = kl_divergence(rho, pi) / in.lambda + slack;
      if (lhs > rhs) ++violations[side];
    }
  }
  const double limit = kEps + 2.0 * std::sqrt(kEps * (1.0 - kEps) / kReps);
  const double rate_pos = static_cast<double>(violations[0]) / kReps;
  const double rate_neg = static_cast<double>(violations[1]) / kReps;
  const double secs = seconds_since(t0);
  return {rate_pos <= limit && rate_neg <= limit && secs < 600.0,
          fmt("violation rate s=+1: %.3f", rate_pos) + fmt(", s=-1: %.3f", rate_neg) + fmt(", limit %.4f", limit) +
              fmt(", lambda %.3f", in.lambda) + fmt(", runtime %.1fs (limit 600s)", secs)};
}

Outcome criterion8() {
  std::size_t bound_failures = 0;
  for (std::size_t k = 0; k < 1000; ++k) {
    Stream s(derive_seed(808, {k}));
    const std::size_t n = uniform_int(s, 2, 500);
    std::vector<double> w(n);
    const bool sparse = k % 4 == 0;
    for (auto& v : w) v = sparse && uniform01(s) < 0.5 ? 0.0 : std::pow(uniform01(s), 3.0);
    w[uniform_int(s, 0, n - 1)] += 0.01;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) v /= total;
    Stream rs = make_stream(809, StreamTag::resample, k);
    const auto anc = resample_systematic(w, rs);
    std::vector<std::size_t> counts(n, 0);
    for (std::size_t a : anc) ++counts.at(a);
    for (std::size_t j = 0; j < n; ++j) {
      const double nw = static_cast<double>(n) * w[j];
      const double c = static_cast<double>(counts[j]);
      if (c != std::floor(nw) && c != std::ceil(nw)) ++bound_failures;
    }
  }

  constexpr std::size_t kDraws = 10000;
  const std::vector<double> w0 = {0.013, 0.25, 0.002, 0.0871, 0.19, 0.0409, 0.111, 0.005, 0.2, 0.101};
  const std::size_t n = w0.size();
  std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
  for (std::size_t d = 0; d < kDraws; ++d) {
    Stream rs = make_stream(810, StreamTag::resample, d);
    std::vector<double> counts(n, 0.0);
    for (std::size_t a : resample_systematic(w0, rs)) counts[a] += 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      sum[j] += counts[j];
      sum_sq[j] += counts[j] * counts[j];
    }
  }
  std::size_t bias_failures = 0;
  double worst_z = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double mean = sum[j] / kDraws;
    const double var = std::max(0.0, (sum_sq[j] - kDraws * mean * mean) / (kDraws - 1.0));
    const double se = std::sqrt(var / kDraws);
    const double err = std::abs(mean - static_cast<double>(n) * w0[j]);
    if (se > 0.0) worst_z = std::max(worst_z, err / se);
    if (!(err <= 3.0 * se + 1e-12)) ++bias_failures;
  }
  return {bound_failures == 0 && bias_failures == 0,
          std::to_string(bound_failures) + " count-bound failures over 1000 weight vectors; " +
              std::to_string(bias_failures) + " biased counts, max |bias|/SE = " + fmt("%.2f", worst_z)};
}

Outcome criterion9() {
  std::size_t self_failures = 0, pinsker_failures = 0, inverse_failures = 0;
  double worst_round_trip = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double a = i / 99.0;
    if (small_kl(a, a) != 0.0) ++self_failures;
    for (int j = 0; j < 100; ++j)
      if (!(pinsker_gap(a, j / 99.0) >= 0.0)) ++pinsker_failures;
  }
  // Targets kept below kl(a, 1 - 1e-6) so the inverse is resolvable in double.
  for (int i = 0; i < 100; ++i) {
    const double a = 0.005 + 0.99 * i / 99.0;
    const double c_max = small_kl(a, 1.0 - 1e-6);
    for (int j = 0; j < 100; ++j) {
      const double c = c_max * j / 99.0;
      const double b = kl_inverse_upper(a, c);
      const double err = std::abs(small_kl(a, b) - c);
      worst_round_trip = std::max(worst_round_trip, err);
      if (!(err <= 1e-9)) ++inverse_failures;
    }
  }
  return {self_failures + pinsker_failures + inverse_failures == 0,
          std::to_string(self_failures) + " kl(a,a) != 0, " + std::to_string(pinsker_failures) +
              " negative Pinsker gaps, " + std::to_string(inverse_failures) +
              " inversion failures, max round-trip error " + fmt("%.3g", worst_round_trip)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PBPOLICY_CLI_PATH + "\" " + args;
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome criterion10(const fs::path& work) {
  const std::string common = " study --dgp dgp2 --replications 2 --n 200 --n-test 2000 --particles 200 "
                             "--u-count 4 --seed 31 --quiet";
  const fs::path a = work / "determinism_a", b = work / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  // Different worker counts must not change the output.
  const int rc_a = run_cli(common + " --threads 1 --out \"" + a.string() + "\"");
  const int rc_b = run_cli(common + " --threads 2 --out \"" + b.string() + "\"");
  if (rc_a != 0 || rc_b != 0)
    return {false, "study runs exited with " + std::to_string(rc_a) + " and " + std::to_string(rc_b)};
  std::size_t compared = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++compared;
    const fs::path other = b / e.path().filename();
    if (!fs::exists(other) || read_file(e.path()) != read_file(other)) ++differing;
  }
  return {compared >= 6 && differing == 0,
          std::to_string(compared) + " CSV files compared, " + std::to_string(differing) + " differ"};
}

// ---------------------------------------------------------------------------
// Full-scale studies

struct StudyCurves {
  std::map<std::string, AveragedCurve> curves;
  double random_slope = 0.0;
  double always_treat_cost = 0.0;
  std::vector<double> batch_levels;  // budgets at which PB-Batch was deployed
  std::string error;
};

bool reference_config(const fs::path& dir) {
  const fs::path cfg = dir / "study_config.json";
  if (!fs::exists(cfg) || !fs::exists(dir / "study_summary.json")) return false;
  const auto j = nlohmann::json::parse(read_file(cfg), nullptr, false);
  if (j.is_discarded()) return false;
  return j.value("replications", 0) == 20 && j.value("n", 0) == 1000 && j.value("particles", 0) == 1000 &&
         j.value("seed", 0) == 1;
}

AveragedCurve read_curve_csv(const fs::path& p, const std::string& method) {
  AveragedCurve c;
  c.method = method;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cost, mean, se, reps;
    std::getline(ls, cost, ',');
    std::getline(ls, mean, ',');
    std::getline(ls, se, ',');
    std::getline(ls, reps, ',');
    c.costs.push_back(std::stod(cost));
    c.gain_mean.push_back(std::stod(mean));
    c.gain_se.push_back(std::stod(se));
    c.n_reps = std::stoul(reps);
  }
  return c;
}

StudyCurves load_study(const fs::path& work, const std::string& dgp) {
  StudyCurves out;
  const fs::path dir = work / dgp;
  if (!reference_config(dir)) {
    std::cerr << "running the reference " << dgp << " study into " << dir << " (this takes hours)\n";
    const int rc = run_cli("study --dgp " + dgp + " --seed 1 --replications 20 --n 1000 --particles 1000 --out \"" +
                           dir.string() + "\"");
    if (rc != 0) {
      out.error = "study exited with " + std::to_string(rc);
      return out;
    }
  }
  const auto summary = nlohmann::json::parse(read_file(dir / "study_summary.json"));
  out.random_slope = summary.at("random_slope").get<double>();
  out.always_treat_cost = summary.at("always_treat_cost").get<double>();
  for (const char* m : kMethods)
    out.curves.emplace(m, read_curve_csv(dir / ("cost_curves_" + std::string(m) + ".csv"), m));
  const auto rep = nlohmann::json::parse(read_file(dir / "replication_0.json"));
  for (const auto& b : rep.at("batch")) out.batch_levels.push_back(b.at("level").get<double>());
  return out;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

Outcome criterion11(const fs::path& work) {
  const StudyCurves s = load_study(work, "dgp1");
  if (!s.error.empty()) return {false, s.error};
  const auto& batch = s.curves.at("pb_batch");
  const auto& ratio = s.curves.at("oracle_ratio");
  const double b25 = batch.gain_at(0.25), b75 = batch.gain_at(0.75);
  const double r25 = ratio.gain_at(0.25), r75 = ratio.gain_at(0.75);
  const bool pass = within(b25, 0.47, 0.04) && within(b75, 1.01, 0.04) && within(r25, b25, 0.03) &&
                    within(r75, b75, 0.03);
  return {pass, fmt("PB-Batch %.4f @0.25 (0.47+-0.04)", b25) + fmt(", %.4f @0.75 (1.01+-0.04)", b75) +
                    fmt("; oracle-ratio %.4f", r25) + fmt(" / %.4f (within 0.03 of PB-Batch)", r75)};
}

Outcome criterion12(const fs::path& work) {
  const StudyCurves s = load_study(work, "dgp2");
  if (!s.error.empty()) return {false, s.error};
  const double batch = s.curves.at("pb_batch").gain_at(0.5);
  const double mv = s.curves.at("pb_mv").gain_at(0.5);
  const double sa = s.curves.at("pb_sa").gain_at(0.5);
  const double rnd = s.random_slope * 0.5;
  const bool pass = within(batch, 0.63, 0.04) && within(mv, 0.61, 0.04) && within(sa, 0.60, 0.04) &&
                    within(rnd, 0.50, 0.02);
  return {pass, fmt("@0.5: PB-Batch %.4f (0.63+-0.04)", batch) + fmt(", PB-MV %.4f (0.61+-0.04)", mv) +
                    fmt(", PB-SA %.4f (0.60+-0.04)", sa) + fmt(", random %.4f (0.50+-0.02)", rnd)};
}

Outcome criterion13(const fs::path& work) {
  std::ostringstream detail;
  bool pass = true;
  for (const std::string dgp : {"dgp1", "dgp2"}) {
    const StudyCurves s = load_study(work, dgp);
    if (!s.error.empty()) return {false, dgp + ": " + s.error};
    const auto& batch = s.curves.at("pb_batch");
    const auto& mv = s.curves.at("pb_mv");
    const auto& sa = s.curves.at("pb_sa");
    std::size_t order_fail = 0, random_fail = 0, interior = 0;
    double worst_bm = std::numeric_limits<double>::infinity(), worst_ms = worst_bm, worst_rand = worst_bm;
    for (double c : s.batch_levels) {
      const double gb = batch.gain_at(c), gm = mv.gain_at(c), gs = sa.gain_at(c);
      worst_bm = std::min(worst_bm, gb - gm);
      worst_ms = std::min(worst_ms, gm - (gs - 0.02));
      if (!(gb >= gm) || !(gm >= gs - 0.02)) ++order_fail;
      if (c > 0.0 && c < s.always_treat_cost) {
        ++interior;
        const double r = s.random_slope * c;
        worst_rand = std::min(worst_rand, std::min({gb, gm, gs}) - r);
        if (!(gb > r && gm > r && gs > r)) ++random_fail;
      }
    }
    pass = pass && order_fail == 0 && random_fail == 0;
    detail << dgp << ": " << order_fail << "/" << s.batch_levels.size() << " batch budgets with ordering failures (min Batch-MV "
           << fmt("%.4f", worst_bm) << ", min MV-(SA-0.02) " << fmt("%.4f", worst_ms) << "), " << random_fail << "/"
           << interior << " interior budgets not above random (min margin " << fmt("%.4f", worst_rand) << "); ";
  }
  return {pass, detail.str()};
}

std::set<int> parse_criteria(const std::string& spec) {
  std::set<int> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    const int lo = std::stoi(part.substr(0, dash));
    const int hi = dash == std::string::npos ? lo : std::stoi(part.substr(dash + 1));
    for (int c = lo; c <= hi; ++c)
      if (c >= 1 && c <= 13) out.insert(c);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string criteria = "1-13";
  std::string work = "acceptance_work";
  app.add_option("--criteria", criteria, "criteria to run, e.g. 1-10 or 2,5,11-13");
  app.add_option("--work", work, "scratch directory for CLI runs and study outputs");
  CLI11_PARSE(app, argc, argv);

  const fs::path work_dir(work);
  fs::create_directories(work_dir);

  const std::map<int, std::pair<std::string, std::function<Outcome()>>> all = {
      {1, {"grid-oracle equivalence", criterion1}},
      {2, {"Lambda(u) strictly decreasing", criterion2}},
      {3, {"u_hat complementary slackness", criterion3}},
      {4, {"Gibbs posterior minimizes the penalized objective", criterion4}},
      {5, {"beta monotone and budget exhaustion", criterion5}},
      {6, {"majority vote loss vs Gibbs regret", criterion6}},
      {7, {"generalization bound coverage", criterion7}},
      {8, {"systematic resampling", criterion8}},
      {9, {"kl and Pinsker", criterion9}},
      {10, {"study determinism", [&] { return criterion10(work_dir); }}},
      {11, {"DGP1 reference gains", [&] { return criterion11(work_dir); }}},
      {12, {"DGP2 reference gains", [&] { return criterion12(work_dir); }}},
      {13, {"method ordering", [&] { return criterion13(work_dir); }}},
  };

  int failed = 0;
  for (int c : parse_criteria(criteria)) {
    const auto& [name, fn] = all.at(c);
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s: %s -- %s\n", c, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return std::min(failed, 125);
}
