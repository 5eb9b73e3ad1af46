#include "pbpolicy/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>

#include "pbpolicy/error.hpp"
#include "pbpolicy/parallel.hpp"
#include "pbpolicy/persistence.hpp"
#include "pbpolicy/policy_rules.hpp"

namespace pbpolicy {

std::vector<double> GridSpec::u_grid_linspace(double u_min, double u_max, std::size_t count) {
  if (!(u_min > 0.0) || !(u_max >= u_min)) throw ValidationError("u grid needs 0 < u_min <= u_max");
  std::vector<double> g{0.0};
  if (count == 1) {
    g.push_back(u_min);
    return g;
  }
  for (std::size_t k = 0; k < count; ++k)
    g.push_back(u_min + (u_max - u_min) * static_cast<double>(k) / static_cast<double>(count - 1));
  return g;
}

GridSpec GridSpec::defaults() { return {u_grid_linspace(0.2, 4.0, 40), default_lambda_targets()}; }

void GridSpec::validate() const {
  if (u_grid.empty() || lambda_targets.empty()) throw ValidationError("grids must be non-empty");
  for (std::size_t k = 0; k < u_grid.size(); ++k) {
    if (!(u_grid[k] >= 0.0)) throw ValidationError("u grid must be non-negative");
    if (k > 0 && !(u_grid[k] > u_grid[k - 1])) throw ValidationError("u grid must be strictly increasing");
  }
  for (std::size_t k = 0; k < lambda_targets.size(); ++k) {
    if (!(lambda_targets[k] > 0.0) || lambda_targets[k] > kDefaultLambdaCap)
      throw ValidationError("lambda targets must lie in (0, 1024]");
    if (k > 0 && !(lambda_targets[k] > lambda_targets[k - 1]))
      throw ValidationError("lambda targets must be strictly increasing");
  }
}

FitData prepare_fit_data(const Sample& sample, const FeatureMap& map) {
  return {ipw_transform(sample), map.transform_all(sample)};
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2 || folds > n) throw ValidationError("need 2 <= folds <= n");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Stream rng = make_stream(seed, StreamTag::fold_split, 0);
  // Fisher-Yates with 53-bit uniforms; std::shuffle's draw pattern is
  // library specific.
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
    std::swap(perm[i], perm[std::min(j, i)]);
  }
  std::vector<std::vector<std::size_t>> out(folds);
  for (std::size_t k = 0; k < folds; ++k) {
    const std::size_t b = k * n / folds, e = (k + 1) * n / folds;
    out[k].assign(perm.begin() + static_cast<std::ptrdiff_t>(b), perm.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return out;
}

namespace {

struct Harvest {
  TemperatureLadder ladder;
  std::vector<std::size_t> target_steps;  // per lambda target
};

Harvest ladder_with_targets(double u, std::span<const double> targets) {
  Harvest h;
  h.ladder = build_default_ladder(u, targets.back());
  h.target_steps = nearest_steps(h.ladder, targets);
  std::vector<std::size_t> cps = h.target_steps;
  cps.push_back(h.ladder.final_step());
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  h.ladder.checkpoints = cps;
  return h;
}

}  // namespace

CrossValidation cross_validate(double u, std::span<const double> lambda_targets, const Sample& training,
                               const FeatureMap& map, std::size_t folds, const SMCConfig& smc, std::uint64_t seed,
                               double prior_sigma) {
  if (lambda_targets.empty()) throw ValidationError("lambda grid is empty");
  const Harvest h = ladder_with_targets(u, lambda_targets);
  const std::size_t m = lambda_targets.size();
  CrossValidation cv;
  cv.u = u;
  for (std::size_t s : h.target_steps) cv.lambdas.push_back(h.ladder.lambdas[s]);
  cv.objective_gibbs.assign(m, 0.0);
  cv.objective_mv.assign(m, 0.0);
  cv.heldout_cost_gibbs.assign(m, 0.0);
  cv.heldout_cost_mv.assign(m, 0.0);
  cv.heldout_gain_gibbs.assign(m, 0.0);
  cv.heldout_gain_mv.assign(m, 0.0);

  const auto fold_rows = make_folds(training.size(), folds, seed);
  const FitData all = prepare_fit_data(training, map);
  const IsotropicNormalPrior prior(map.dimension(), prior_sigma);
  for (std::size_t k = 0; k < folds; ++k) {
    std::vector<std::size_t> train_rows;
    for (std::size_t o = 0; o < folds; ++o)
      if (o != k) train_rows.insert(train_rows.end(), fold_rows[o].begin(), fold_rows[o].end());
    std::sort(train_rows.begin(), train_rows.end());
    std::vector<std::size_t> hold_rows = fold_rows[k];
    std::sort(hold_rows.begin(), hold_rows.end());

    const Sample train = subsample(training, train_rows);
    const Sample hold = subsample(training, hold_rows);
    const FitData ft{ipw_transform(train), all.features.select_rows(train_rows)};
    const FitData fh{ipw_transform(hold), all.features.select_rows(hold_rows)};

    SMCConfig cfg = smc;
    cfg.seed = derive_seed(seed, {k + 1});
    const SMCResult res = run_smc(ft.scores, ft.features, prior, h.ladder, cfg);
    for (std::size_t c = 0; c < m; ++c) {
      const auto& p = res.checkpoints.at(h.target_steps[c]);
      const auto shares = vote_shares(p, fh.features);
      const auto g = empirical_welfare_cost(shares, fh.scores);
      const auto mvv = mv_values(shares);
      const auto v = empirical_welfare_cost(mvv, fh.scores);
      const double inv = 1.0 / static_cast<double>(folds);
      cv.objective_gibbs[c] += inv * (g.welfare - u * g.cost);
      cv.objective_mv[c] += inv * (v.welfare - u * v.cost);
      cv.heldout_cost_gibbs[c] += inv * g.cost;
      cv.heldout_cost_mv[c] += inv * v.cost;
      cv.heldout_gain_gibbs[c] += inv * g.welfare;
      cv.heldout_gain_mv[c] += inv * v.welfare;
    }
  }
  for (std::size_t c = 1; c < m; ++c) {
    if (cv.objective_gibbs[c] > cv.objective_gibbs[cv.best_gibbs]) cv.best_gibbs = c;
    if (cv.objective_mv[c] > cv.objective_mv[cv.best_mv]) cv.best_mv = c;
  }
  return cv;
}

double cross_validate_lambda(double u, std::span<const double> lambda_targets, const Sample& training,
                             const FeatureMap& map, std::size_t folds, RuleKind kind, const SMCConfig& smc,
                             std::uint64_t seed, double prior_sigma) {
  return cross_validate(u, lambda_targets, training, map, folds, smc, seed, prior_sigma).lambda_for(kind);
}

CostCurve::CostCurve(std::vector<std::pair<double, double>> points, std::string method) : method_(std::move(method)) {
  for (const auto& [c, g] : points)
    if (!std::isfinite(c) || !std::isfinite(g)) throw ValidationError("cost curve points must be finite");
  std::sort(points.begin(), points.end());
  for (const auto& pt : points) {
    if (!points_.empty() && points_.back().first == pt.first)
      points_.back().second = std::max(points_.back().second, pt.second);
    else
      points_.push_back(pt);
  }
  if (points_.size() < 2) throw ValidationError("cost curve needs at least two distinct costs");
}

double CostCurve::gain_at(double cost, bool* clamped) const {
  if (clamped) *clamped = cost < min_cost() || cost > max_cost();
  if (cost <= min_cost()) return points_.front().second;
  if (cost >= max_cost()) return points_.back().second;
  const auto it = std::upper_bound(points_.begin(), points_.end(), cost,
                                   [](double v, const std::pair<double, double>& p) { return v < p.first; });
  const auto& [c1, g1] = *it;
  const auto& [c0, g0] = *(it - 1);
  return g0 + (g1 - g0) * (cost - c0) / (c1 - c0);
}

CostCurve build_cost_curve(std::vector<std::pair<double, double>> points, std::string method) {
  return CostCurve(std::move(points), std::move(method));
}

double AveragedCurve::gain_at(double cost) const {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < costs.size(); ++k) pts.emplace_back(costs[k], gain_mean[k]);
  return CostCurve(std::move(pts), method).gain_at(cost);
}

AveragedCurve average_curves(std::span<const CostCurve> curves, std::span<const double> query_costs) {
  if (curves.empty()) throw ValidationError("no curves to average");
  AveragedCurve out;
  out.method = curves.front().method();
  out.n_reps = curves.size();
  const double r = static_cast<double>(curves.size());
  for (double c : query_costs) {
    double s = 0.0, ss = 0.0;
    for (const auto& cv : curves) {
      const double g = cv.gain_at(c);
      s += g;
      ss += g * g;
    }
    const double mean = s / r;
    const double var = curves.size() > 1 ? std::max(0.0, (ss - r * mean * mean) / (r - 1.0)) : 0.0;
    out.costs.push_back(c);
    out.gain_mean.push_back(mean);
    out.gain_se.push_back(std::sqrt(var / r));
  }
  return out;
}

GainCost greedy_batch(std::span<const double> scores, std::span<const double> unit_costs,
                      std::span<const double> unit_gains, double budget) {
  if (scores.size() != unit_costs.size() || scores.size() != unit_gains.size())
    throw ValidationError("batch inputs not aligned");
  if (!(budget >= 0.0)) throw ValidationError("budget must be non-negative");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  GainCost out;
  for (std::size_t i : order) {
    if (!(scores[i] > 0.0)) break;
    if (out.cost + unit_costs[i] > budget) break;
    out.cost += unit_costs[i];
    out.gain += unit_gains[i];
  }
  return out;
}

namespace {

struct BatchInputs {
  std::vector<double> unit_costs;
  std::vector<double> unit_gains;
  std::vector<double> ratio_scores;
  std::vector<double> cate_scores;
};

BatchInputs batch_inputs(const SimulatedPopulation& pop) {
  BatchInputs b;
  const double n = static_cast<double>(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    b.unit_costs.push_back(pop.expected_cost[i] / n);
    b.unit_gains.push_back(pop.cate[i] / n);
    const double c = pop.expected_cost[i], g = pop.cate[i];
    b.ratio_scores.push_back(c > 0.0 ? g / c : (g > 0.0 ? HUGE_VAL : -HUGE_VAL));
    b.cate_scores.push_back(g);
  }
  return b;
}

}  // namespace

GainCost oracle_ratio_baseline(const SimulatedPopulation& population, double budget) {
  const auto b = batch_inputs(population);
  return greedy_batch(b.ratio_scores, b.unit_costs, b.unit_gains, budget);
}

GainCost oracle_cate_baseline(const SimulatedPopulation& population, double budget) {
  const auto b = batch_inputs(population);
  return greedy_batch(b.cate_scores, b.unit_costs, b.unit_gains, budget);
}

void StudyConfig::validate() const {
  if (replications < 1) throw ValidationError("need at least one replication");
  if (n < 4) throw ValidationError("training sample size too small");
  if (n_test < 2) throw ValidationError("test population too small");
  if (folds < 2) throw ValidationError("need at least two folds");
  if (cost_bins < 1) throw ValidationError("need at least one cost bin");
  if (poly_degree < 1) throw ValidationError("polynomial degree must be >= 1");
  if (!(prior_sigma > 0.0)) throw ValidationError("prior sigma must be positive");
  if (!(curve_step > 0.0)) throw ValidationError("curve step must be positive");
  grids.validate();
  smc.validate();
}

nlohmann::json StudyConfig::to_json() const {
  return {{"dgp", dgp_name(dgp)},
          {"replications", replications},
          {"n", n},
          {"n_test", n_test},
          {"folds", folds},
          {"cost_bins", cost_bins},
          {"poly_degree", poly_degree},
          {"prior_sigma", prior_sigma},
          {"curve_step", curve_step},
          {"seed", seed},
          {"u_grid", grids.u_grid},
          {"lambda_targets", grids.lambda_targets},
          {"particles", smc.n_particles},
          {"tau_ess", smc.tau_ess},
          {"mh_steps_per_stage", smc.mh_steps_per_stage},
          {"covariance_scale_exponent", smc.covariance_scale_exponent},
          {"normalized", smc.normalized},
          {"resampling", smc.scheme == ResampleScheme::systematic ? "systematic" : "multinomial"}};
}

namespace {

nlohmann::json gc_json(const GainCost& g) { return {{"gain", g.gain}, {"cost", g.cost}}; }

std::uint64_t test_seed(std::uint64_t seed) { return derive_seed(seed, {0x7e57}); }
std::uint64_t data_seed(std::uint64_t seed, std::size_t k) {
  return derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::replication), k});
}

double always_treat_cost(const SimulatedPopulation& pop) {
  return std::accumulate(pop.expected_cost.begin(), pop.expected_cost.end(), 0.0) / static_cast<double>(pop.size());
}

std::vector<double> batch_levels(double b_max, std::size_t bins) {
  std::vector<double> levels;
  for (std::size_t k = 1; k <= bins; ++k)
    levels.push_back(k == bins ? b_max : b_max * static_cast<double>(k) / static_cast<double>(bins));
  return levels;
}

}  // namespace

nlohmann::json ReplicationResult::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& r : per_u)
    per.push_back({{"u", r.u},
                   {"lambda_gibbs", r.lambda_gibbs},
                   {"lambda_mv", r.lambda_mv},
                   {"estimated_cost_gibbs", r.est_cost_gibbs},
                   {"estimated_cost_mv", r.est_cost_mv},
                   {"estimated_gain_gibbs", r.est_gain_gibbs},
                   {"estimated_gain_mv", r.est_gain_mv},
                   {"training_cost_gibbs", r.train_cost_gibbs},
                   {"true_gibbs", gc_json(r.true_gibbs)},
                   {"true_mv", gc_json(r.true_mv)},
                   {"oracle_ratio_at_gibbs_cost", gc_json(r.oracle_ratio_at_gibbs_cost)},
                   {"oracle_ratio_at_mv_cost", gc_json(r.oracle_ratio_at_mv_cost)}});
  nlohmann::json batch = nlohmann::json::array();
  for (std::size_t k = 0; k < batch_levels.size(); ++k)
    batch.push_back({{"level", batch_levels[k]},
                     {"pb_batch", gc_json(this->batch[k])},
                     {"oracle_ratio", gc_json(oracle_ratio[k])},
                     {"oracle_cate", gc_json(oracle_cate[k])}});
  nlohmann::json curves_j = nlohmann::json::object();
  for (const auto& [name, c] : curves) curves_j[name] = c.points();
  return {{"index", index}, {"data_seed", data_seed}, {"per_u", per}, {"batch", batch}, {"curves", curves_j}};
}

ReplicationResult run_replication(const StudyConfig& config, std::size_t index, const SimulatedPopulation& test) {
  ReplicationResult rep;
  rep.index = index;
  rep.data_seed = data_seed(config.seed, index);
  const SimulatedPopulation train = generate({config.dgp, rep.data_seed, config.n}, 1);

  FeatureMap map = FeatureMap::polynomial(config.poly_degree, dgp_covariate_dim(config.dgp));
  map.fit_normalization(train.covariates());
  const FitData full = prepare_fit_data(train.sample, map);
  const FeatureMatrix test_features = map.transform_all(test.covariates());
  const IsotropicNormalPrior prior(map.dimension(), config.prior_sigma);
  const auto binputs = batch_inputs(test);

  SMCConfig smc = config.smc;
  smc.threads = 1;
  std::vector<BatchRule> mv_rules;
  std::vector<std::pair<double, double>> sa_points{{0.0, 0.0}}, mv_points{{0.0, 0.0}};

  for (std::size_t ui = 0; ui < config.grids.u_grid.size(); ++ui) {
    const double u = config.grids.u_grid[ui];
    const std::uint64_t cv_seed = derive_seed(config.seed, {0xC7, index, ui});
    const CrossValidation cv = cross_validate(u, config.grids.lambda_targets, train.sample, map, config.folds, smc,
                                              cv_seed, config.prior_sigma);
    UResult r;
    r.u = u;
    r.lambda_gibbs = cv.lambda_for(RuleKind::gibbs);
    r.lambda_mv = cv.lambda_for(RuleKind::mv);
    r.est_cost_gibbs = cv.heldout_cost_gibbs[cv.best_gibbs];
    r.est_cost_mv = cv.heldout_cost_mv[cv.best_mv];
    r.est_gain_gibbs = cv.heldout_gain_gibbs[cv.best_gibbs];
    r.est_gain_mv = cv.heldout_gain_mv[cv.best_mv];

    // One full-sample run reaching the larger selected lambda; both selected
    // values are steps of the same schedule, so they are harvested en route.
    TemperatureLadder ladder = build_default_ladder(u, std::max(r.lambda_gibbs, r.lambda_mv));
    const double sel[2] = {r.lambda_gibbs, r.lambda_mv};
    const auto steps = nearest_steps(ladder, sel);
    ladder.checkpoints = {steps[0], steps[1]};
    std::sort(ladder.checkpoints.begin(), ladder.checkpoints.end());
    ladder.checkpoints.erase(std::unique(ladder.checkpoints.begin(), ladder.checkpoints.end()),
                             ladder.checkpoints.end());
    smc.seed = derive_seed(config.seed, {0xF1, index, ui});
    const SMCResult res = run_smc(full.scores, full.features, prior, ladder, smc);
    const auto& pg = res.checkpoints.at(steps[0]);
    const auto& pm = res.checkpoints.at(steps[1]);

    r.train_cost_gibbs = rule_empirical_cost(pg, full.scores, full.features);
    const auto sa_shares = vote_shares(pg, test_features);
    r.true_gibbs = true_gain_cost(sa_shares, test);
    const auto mv_shares = vote_shares(pm, test_features);
    r.true_mv = true_gain_cost(mv_values(mv_shares), test);
    r.oracle_ratio_at_gibbs_cost = oracle_ratio_baseline(test, r.true_gibbs.cost);
    r.oracle_ratio_at_mv_cost = oracle_ratio_baseline(test, r.true_mv.cost);

    sa_points.emplace_back(r.true_gibbs.cost, r.true_gibbs.gain);
    mv_points.emplace_back(r.true_mv.cost, r.true_mv.gain);
    mv_rules.push_back({r.est_cost_mv, mv_shares, "u=" + std::to_string(u)});
    rep.per_u.push_back(r);
  }

  const double b_max = always_treat_cost(test);
  rep.batch_levels = batch_levels(b_max, config.cost_bins);
  std::vector<std::pair<double, double>> batch_pts{{0.0, 0.0}}, ratio_pts{{0.0, 0.0}}, cate_pts{{0.0, 0.0}};
  for (std::size_t k = 0; k < rep.batch_levels.size(); ++k) {
    const double level = rep.batch_levels[k];
    const BatchPlan plan = batch_assign(binputs.unit_costs, mv_rules, level, k + 1);
    GainCost g;
    for (std::size_t i : plan.order) g.gain += binputs.unit_gains[i];
    g.cost = plan.realized_cost;
    rep.batch.push_back(g);
    rep.oracle_ratio.push_back(greedy_batch(binputs.ratio_scores, binputs.unit_costs, binputs.unit_gains, level));
    rep.oracle_cate.push_back(greedy_batch(binputs.cate_scores, binputs.unit_costs, binputs.unit_gains, level));
    batch_pts.emplace_back(g.cost, g.gain);
    ratio_pts.emplace_back(rep.oracle_ratio.back().cost, rep.oracle_ratio.back().gain);
    cate_pts.emplace_back(rep.oracle_cate.back().cost, rep.oracle_cate.back().gain);
  }
  rep.curves.emplace("pb_sa", CostCurve(sa_points, "pb_sa"));
  rep.curves.emplace("pb_mv", CostCurve(mv_points, "pb_mv"));
  rep.curves.emplace("pb_batch", CostCurve(batch_pts, "pb_batch"));
  rep.curves.emplace("oracle_ratio", CostCurve(ratio_pts, "oracle_ratio"));
  rep.curves.emplace("oracle_cate", CostCurve(cate_pts, "oracle_cate"));
  return rep;
}

StudyReport run_study(const StudyConfig& config, bool verbose) {
  config.validate();
  StudyReport report;
  report.config = config;
  const SimulatedPopulation test = generate({config.dgp, test_seed(config.seed), config.n_test}, config.threads);
  report.always_treat_cost = always_treat_cost(test);
  const double mean_gain = std::accumulate(test.cate.begin(), test.cate.end(), 0.0) / static_cast<double>(test.size());
  report.random_slope = mean_gain / report.always_treat_cost;

  report.replications.resize(config.replications);
  const unsigned threads = resolve_threads(config.threads);
  parallel_for(config.replications, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      report.replications[k] = run_replication(config, k, test);
      if (verbose) std::cerr << "replication " << (k + 1) << "/" << config.replications << " done\n";
    }
  });

  std::vector<double> query;
  const auto steps = static_cast<std::size_t>(std::floor(report.always_treat_cost / config.curve_step + 1e-9));
  for (std::size_t k = 0; k <= steps; ++k) query.push_back(static_cast<double>(k) * config.curve_step);

  for (const char* m : kMethods) {
    const std::string name(m);
    std::vector<CostCurve> curves;
    if (name == "random") {
      curves.push_back(CostCurve({{0.0, 0.0}, {report.always_treat_cost, report.random_slope * report.always_treat_cost}},
                                 name));
    } else {
      for (const auto& r : report.replications) curves.push_back(r.curves.at(name));
    }
    AveragedCurve avg = average_curves(curves, query);
    avg.method = name;
    if (name == "random") avg.n_reps = config.replications;
    report.curves.emplace(name, std::move(avg));
  }
  return report;
}

nlohmann::json StudyReport::summary() const {
  nlohmann::json gains = nlohmann::json::object();
  for (const auto& [name, c] : curves) {
    nlohmann::json g = nlohmann::json::object();
    for (double b : {0.25, 0.5, 0.75, 1.0})
      if (b <= always_treat_cost) {
        char key[16];
        std::snprintf(key, sizeof key, "%.2f", b);
        g[key] = c.gain_at(b);
      }
    gains[name] = g;
  }
  return {{"dgp", dgp_name(config.dgp)},
          {"replications", replications.size()},
          {"always_treat_cost", always_treat_cost},
          {"random_slope", random_slope},
          {"gain_at_cost", gains},
          {"baselines",
           "oracle_ratio and oracle_cate rank test units by the true delta_y/E[C1|X] and delta_y; they stand in "
           "for forest-based ratio and CATE estimators, which are not implemented, and act as upper references"}};
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

void write_study_outputs(const StudyReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (const auto& [name, c] : report.curves) {
    std::ostringstream os;
    os << "cost,gain_mean,gain_se,n_reps\n";
    for (std::size_t k = 0; k < c.costs.size(); ++k)
      os << fmt(c.costs[k]) << ',' << fmt(c.gain_mean[k]) << ',' << fmt(c.gain_se[k]) << ',' << c.n_reps << '\n';
    write_text_atomic((fs::path(out_dir) / ("cost_curves_" + name + ".csv")).string(), os.str());
  }
  for (const auto& r : report.replications)
    save_json_atomic((fs::path(out_dir) / ("replication_" + std::to_string(r.index) + ".json")).string(),
                     r.to_json());
  save_json_atomic((fs::path(out_dir) / "study_config.json").string(), report.config.to_json());
  save_json_atomic((fs::path(out_dir) / "study_summary.json").string(), report.summary());
}

}  // namespace pbpolicy
