#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pbpolicy/bounds.hpp"
#include "pbpolicy/core_data.hpp"
#include "pbpolicy/dgp.hpp"
#include "pbpolicy/error.hpp"
#include "pbpolicy/gibbs_posterior.hpp"
#include "pbpolicy/harness.hpp"
#include "pbpolicy/kernels.hpp"
#include "pbpolicy/oracle.hpp"
#include "pbpolicy/parallel.hpp"
#include "pbpolicy/persistence.hpp"
#include "pbpolicy/policy_rules.hpp"
#include "pbpolicy/smc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pbpolicy;

namespace {

std::string config_path;

// Values from --config fill every option not already set by a flag or an
// environment variable. Keys are long option names without the dashes.
void apply_config(CLI::App* sub) {
  if (config_path.empty()) return;
  const json cfg = load_json(config_path);
  if (!cfg.is_object()) throw ValidationError("config file must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") continue;
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw ValidationError("unknown config key for '" + sub->get_name() + "': " + key);
    }
    if (opt->count() > 0) continue;
    std::string text;
    if (value.is_string())
      text = value.get<std::string>();
    else if (value.is_boolean())
      text = value.get<bool>() ? "true" : "false";
    else if (value.is_number())
      text = value.dump();
    else
      throw ValidationError("config key '" + key + "' must be a scalar");
    opt->add_result(text);
    opt->run_callback();
  }
}

void require(bool present, const std::string& flag) {
  if (!present) throw ValidationError("missing required option --" + flag);
}

void echo_config(const std::string& out, const std::string& subcommand, json resolved) {
  resolved["subcommand"] = subcommand;
  resolved["kernel_isa"] = kernels::isa_name(kernels::active_isa());
  save_json_atomic((fs::path(out) / "run_config.json").string(), resolved);
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data, out;
  std::optional<double> lambda, u, budget, propensity;
  double kappa = 0.5;
  std::size_t particles = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  int degree = 2;
  double prior_sigma = 1.0;
  bool standardize = true;
  bool normalized = true;
  double tau_ess = 0.5;
  std::size_t mh_steps = 1;
  std::size_t u_count = 40;
  double u_min = 0.2;
  double u_max = 4.0;
};

void add_fit(CLI::App& app, FitArgs& a) {
  auto* s = app.add_subcommand("fit", "Fit a Gibbs posterior by tempering SMC and write rule.json");
  s->add_option("--data", a.data, "CSV with y, c, d, x1..xk and optionally e");
  s->add_option("--out", a.out, "Output directory");
  s->add_option("--lambda", a.lambda, "Inverse temperature (default 64 when only --budget is given)");
  s->add_option("--u", a.u, "Cost multiplier; exclusive with --budget");
  s->add_option("--budget", a.budget, "Budget B; u is solved from the SMC budget curve");
  s->add_option("--propensity", a.propensity, "Constant propensity when the CSV has no e column");
  s->add_option("--kappa", a.kappa, "Overlap constant")->capture_default_str();
  s->add_option("--particles", a.particles, "Number of particles")->capture_default_str();
  s->add_option("--seed", a.seed, "Random seed")->envname("PBPOLICY_SEED")->capture_default_str();
  s->add_option("--threads", a.threads, "Worker threads, 0 = all cores")->envname("PBPOLICY_THREADS");
  s->add_option("--degree", a.degree, "Polynomial feature degree")->capture_default_str();
  s->add_option("--prior-sigma", a.prior_sigma, "Prior standard deviation")->capture_default_str();
  s->add_option("--standardize", a.standardize, "Standardize non-constant features")->capture_default_str();
  s->add_option("--normalized", a.normalized, "Scale lambda by the mean welfare score")->capture_default_str();
  s->add_option("--tau-ess", a.tau_ess, "Resampling threshold as a fraction of N")->capture_default_str();
  s->add_option("--mh-steps", a.mh_steps, "MH sweeps per stage")->capture_default_str();
  s->add_option("--u-count", a.u_count, "Budget mode: number of positive u grid values")->capture_default_str();
  s->add_option("--u-min", a.u_min, "Budget mode: smallest positive u")->capture_default_str();
  s->add_option("--u-max", a.u_max, "Budget mode: largest u")->capture_default_str();
}

int run_fit(CLI::App* sub, FitArgs& a) {
  apply_config(sub);
  require(!a.data.empty(), "data");
  require(!a.out.empty(), "out");
  if (a.budget && a.u) throw ValidationError("--u and --budget are mutually exclusive");
  if (!a.budget && !(a.lambda && a.u)) throw ValidationError("fit needs --lambda and --u, or --budget");
  const double lambda = a.lambda.value_or(64.0);

  const Sample sample = read_sample_csv(a.data, a.propensity, a.kappa);
  FeatureMap map = FeatureMap::polynomial(a.degree, sample.covariate_dim());
  if (a.standardize) {
    std::vector<std::vector<double>> xs;
    for (const auto& o : sample.observations) xs.push_back(o.x);
    map.fit_normalization(xs);
  }
  const FitData fd = prepare_fit_data(sample, map);
  const IsotropicNormalPrior prior(map.dimension(), a.prior_sigma);

  SMCConfig cfg;
  cfg.n_particles = a.particles;
  cfg.seed = a.seed;
  cfg.threads = resolve_threads(a.threads);
  cfg.normalized = a.normalized;
  cfg.tau_ess = a.tau_ess;
  cfg.mh_steps_per_stage = a.mh_steps;
  cfg.validate();

  auto fit_at = [&](double u, std::uint64_t seed) {
    SMCConfig c = cfg;
    c.seed = seed;
    const TemperatureLadder ladder = build_default_ladder(u, lambda);
    SMCResult r = run_smc(fd.scores, fd.features, prior, ladder, c);
    return std::make_pair(ladder, std::move(r));
  };

  double u = a.u.value_or(0.0);
  json budget_info = nullptr;
  if (a.budget) {
    std::vector<std::pair<double, double>> curve;
    auto lambda_hat = [&](std::size_t idx, double uu) {
      auto [ladder, r] = fit_at(uu, derive_seed(a.seed, {0xB0, idx}));
      return particle_average_cost(r.checkpoints.at(ladder.final_step()), fd.scores, fd.features);
    };
    const double at_zero = lambda_hat(0, 0.0);
    curve.emplace_back(0.0, at_zero);
    if (at_zero <= *a.budget) {
      u = 0.0;
    } else {
      const auto grid = GridSpec::u_grid_linspace(a.u_min, a.u_max, a.u_count);
      for (std::size_t k = 1; k < grid.size(); ++k) curve.emplace_back(grid[k], lambda_hat(k, grid[k]));
      u = solve_u_hat(*a.budget, lambda, interpolated_budget_evaluator(curve));
    }
    json pts = json::array();
    for (const auto& [uu, c] : curve) pts.push_back({{"u", uu}, {"expected_cost", c}});
    budget_info = {{"budget", *a.budget}, {"u_hat", u}, {"budget_curve", pts}};
  }

  auto [ladder, res] = fit_at(u, a.seed);
  const WeightedParticles& final_p = res.checkpoints.at(ladder.final_step());
  const GibbsRule rule(final_p, map);

  json trace = json::array();
  for (const auto& t : res.trace)
    trace.push_back({{"step", t.step},
                     {"lambda", t.lambda},
                     {"u", t.u},
                     {"ess", t.ess},
                     {"resampled", t.resampled},
                     {"acceptance_rate", t.acceptance_rate}});
  const json chosen = {{"lambda", lambda}, {"u", u}};
  const json diag = {{"chosen", chosen},
                     {"budget", budget_info},
                     {"n", sample.size()},
                     {"feature_dimension", map.dimension()},
                     {"mean_delta_y", fd.scores.mean_delta_y},
                     {"estimated_cost_gibbs", rule_empirical_cost(final_p, fd.scores, fd.features)},
                     {"estimated_welfare_gibbs", rule_empirical_welfare(final_p, fd.scores, fd.features)},
                     {"posterior_mean_cost", particle_average_cost(final_p, fd.scores, fd.features)},
                     {"steps", ladder.final_step()},
                     {"trace", trace}};

  fs::create_directories(a.out);
  save_rule((fs::path(a.out) / "rule.json").string(), rule, {{"lambda", lambda}, {"u", u}, {"seed", a.seed}});
  save_json_atomic((fs::path(a.out) / "diagnostics.json").string(), diag);
  echo_config(a.out, "fit",
              {{"data", a.data},
               {"out", a.out},
               {"lambda", lambda},
               {"u", a.u ? json(*a.u) : json(nullptr)},
               {"budget", opt_json(a.budget)},
               {"propensity", opt_json(a.propensity)},
               {"kappa", a.kappa},
               {"particles", a.particles},
               {"seed", a.seed},
               {"degree", a.degree},
               {"prior-sigma", a.prior_sigma},
               {"standardize", a.standardize},
               {"normalized", a.normalized},
               {"tau-ess", a.tau_ess},
               {"mh-steps", a.mh_steps},
               {"u-count", a.u_count},
               {"u-min", a.u_min},
               {"u-max", a.u_max}});
  std::cerr << "fit: lambda=" << lambda << " u=" << u << " steps=" << ladder.final_step() << "\n";
  return 0;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string rule, data, out, mode = "prob";
  std::uint64_t seed = 1;
};

void add_score(CLI::App& app, ScoreArgs& a) {
  auto* s = app.add_subcommand("score", "Apply a fitted rule to covariates and write assignments.csv");
  s->add_option("--rule", a.rule, "rule.json written by fit");
  s->add_option("--data", a.data, "CSV with x1..xk columns");
  s->add_option("--out", a.out, "Output directory");
  s->add_option("--mode", a.mode, "prob, mv or sample")
      ->check(CLI::IsMember({"prob", "mv", "sample"}))
      ->capture_default_str();
  s->add_option("--seed", a.seed, "Seed for sample mode")->envname("PBPOLICY_SEED")->capture_default_str();
}

int run_score(CLI::App* sub, ScoreArgs& a) {
  apply_config(sub);
  require(!a.rule.empty(), "rule");
  require(!a.data.empty(), "data");
  require(!a.out.empty(), "out");
  if (a.mode != "prob" && a.mode != "mv" && a.mode != "sample")
    throw ValidationError("mode must be prob, mv or sample");
  const GibbsRule rule = load_rule(a.rule);
  const auto xs = read_covariates_csv(a.data);
  if (!xs.empty() && xs.front().size() != rule.feature_map().input_dimension())
    throw ValidationError("covariate dimension " + std::to_string(xs.front().size()) + " does not match rule input " +
                          std::to_string(rule.feature_map().input_dimension()));

  std::ostringstream os;
  if (a.mode == "prob") {
    os << "row,probability\n";
    const auto p = rule.treat_probabilities(xs);
    for (std::size_t i = 0; i < p.size(); ++i) os << i << ',' << fmt17(p[i]) << '\n';
  } else {
    const auto d = a.mode == "mv" ? rule.mv_decisions(xs) : rule.sample_assignments(xs, a.seed);
    os << "row," << (a.mode == "mv" ? "mv" : "assignment") << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) os << i << ',' << static_cast<int>(d[i]) << '\n';
  }
  fs::create_directories(a.out);
  write_text_atomic((fs::path(a.out) / "assignments.csv").string(), os.str());
  echo_config(a.out, "score",
              {{"rule", a.rule}, {"data", a.data}, {"out", a.out}, {"mode", a.mode}, {"seed", a.seed}});
  return 0;
}

// ---------------------------------------------------------------- study

struct StudyArgs {
  std::string dgp = "dgp1", out;
  std::size_t replications = 20, n = 1000, n_test = 10000, particles = 1000, folds = 2, bins = 20;
  std::size_t u_count = 40;
  double u_min = 0.2, u_max = 4.0;
  int degree = 2;
  double prior_sigma = 1.0;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool quiet = false;
};

void add_study(CLI::App& app, StudyArgs& a) {
  auto* s = app.add_subcommand("study", "Run the simulation study and write cost-curve CSVs");
  s->add_option("--dgp", a.dgp, "dgp1 or dgp2")->capture_default_str();
  s->add_option("--out", a.out, "Output directory");
  s->add_option("--replications", a.replications, "Replications")->capture_default_str();
  s->add_option("--n", a.n, "Training sample size")->capture_default_str();
  s->add_option("--n-test", a.n_test, "Test population size")->capture_default_str();
  s->add_option("--particles", a.particles, "Particles per SMC run")->capture_default_str();
  s->add_option("--folds", a.folds, "Cross-validation folds")->capture_default_str();
  s->add_option("--bins", a.bins, "Cost bins for the batch method")->capture_default_str();
  s->add_option("--u-count", a.u_count, "Number of positive u grid values")->capture_default_str();
  s->add_option("--u-min", a.u_min, "Smallest positive u")->capture_default_str();
  s->add_option("--u-max", a.u_max, "Largest u")->capture_default_str();
  s->add_option("--degree", a.degree, "Polynomial feature degree")->capture_default_str();
  s->add_option("--prior-sigma", a.prior_sigma, "Prior standard deviation")->capture_default_str();
  s->add_option("--seed", a.seed, "Random seed")->envname("PBPOLICY_SEED")->capture_default_str();
  s->add_option("--threads", a.threads, "Worker threads, 0 = all cores")->envname("PBPOLICY_THREADS");
  s->add_flag("--quiet", a.quiet, "Suppress progress on stderr");
}

int run_study_cmd(CLI::App* sub, StudyArgs& a) {
  apply_config(sub);
  require(!a.out.empty(), "out");
  StudyConfig c;
  c.dgp = parse_dgp(a.dgp);
  c.replications = a.replications;
  c.n = a.n;
  c.n_test = a.n_test;
  c.folds = a.folds;
  c.cost_bins = a.bins;
  c.poly_degree = a.degree;
  c.prior_sigma = a.prior_sigma;
  c.seed = a.seed;
  c.threads = a.threads;
  c.grids.u_grid = GridSpec::u_grid_linspace(a.u_min, a.u_max, a.u_count);
  c.smc.n_particles = a.particles;
  const StudyReport report = run_study(c, !a.quiet);
  write_study_outputs(report, a.out);
  echo_config(a.out, "study",
              {{"dgp", a.dgp},
               {"out", a.out},
               {"replications", a.replications},
               {"n", a.n},
               {"n-test", a.n_test},
               {"particles", a.particles},
               {"folds", a.folds},
               {"bins", a.bins},
               {"u-count", a.u_count},
               {"u-min", a.u_min},
               {"u-max", a.u_max},
               {"degree", a.degree},
               {"prior-sigma", a.prior_sigma},
               {"seed", a.seed}});
  return 0;
}

// ---------------------------------------------------------------- bounds

struct BoundsArgs {
  double n = 0.0, kappa = 0.5, lambda = 1.0, u = 0.0, eps = 0.05, q = 1.0, dkl = 0.0;
  std::optional<double> my, mc, grid, nu, u_hat, u_star;
  std::string out;
};

void add_bounds(CLI::App& app, BoundsArgs& a) {
  auto* s = app.add_subcommand("bounds", "Evaluate the PAC-Bayesian bounds and print a JSON report");
  s->add_option("--n", a.n, "Sample size");
  s->add_option("--kappa", a.kappa, "Overlap constant")->capture_default_str();
  s->add_option("--my", a.my, "Outcome range M_y");
  s->add_option("--mc", a.mc, "Cost range M_c");
  s->add_option("--lambda", a.lambda, "Inverse temperature")->capture_default_str();
  s->add_option("--u", a.u, "Cost multiplier")->capture_default_str();
  s->add_option("--eps", a.eps, "Confidence level epsilon")->capture_default_str();
  s->add_option("--q", a.q, "Parameter dimension")->capture_default_str();
  s->add_option("--grid", a.grid, "Grid cardinality |W| for the union-bound term");
  s->add_option("--nu", a.nu, "Margin constant for the normal-prior terms");
  s->add_option("--dkl", a.dkl, "KL divergence of the posterior from the prior")->capture_default_str();
  s->add_option("--u-hat", a.u_hat, "Solved multiplier u-hat");
  s->add_option("--u-star", a.u_star, "Population multiplier u*");
  s->add_option("--out", a.out, "Optional output directory for bound_report.json");
}

int run_bounds(CLI::App* sub, BoundsArgs& a) {
  apply_config(sub);
  BoundInputs in;
  in.n = a.n;
  in.kappa = a.kappa;
  in.m_y = a.my;
  in.m_c = a.mc;
  in.lambda = a.lambda;
  in.u = a.u;
  in.epsilon = a.eps;
  in.q = a.q;
  in.grid_cardinality = a.grid;
  in.nu = a.nu;
  const BoundReport r = bound_report(in, a.dkl, a.u_hat, a.u_star);
  std::cout << dump_json(to_json(r));
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    save_bound_report((fs::path(a.out) / "bound_report.json").string(), r);
    echo_config(a.out, "bounds",
                {{"n", a.n},
                 {"kappa", a.kappa},
                 {"my", opt_json(a.my)},
                 {"mc", opt_json(a.mc)},
                 {"lambda", a.lambda},
                 {"u", a.u},
                 {"eps", a.eps},
                 {"q", a.q},
                 {"grid", opt_json(a.grid)},
                 {"nu", opt_json(a.nu)},
                 {"dkl", a.dkl},
                 {"u-hat", opt_json(a.u_hat)},
                 {"u-star", opt_json(a.u_star)},
                 {"out", a.out}});
  }
  return 0;
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  std::string dgp = "dgp1", out;
  double budget = 0.0;
  std::size_t n = 10000;
  std::uint64_t seed = 1;
};

void add_oracle(CLI::App& app, OracleArgs& a) {
  auto* s = app.add_subcommand("oracle", "Solve the budget-constrained first-best rule on a simulated population");
  s->add_option("--dgp", a.dgp, "dgp1 or dgp2")->capture_default_str();
  s->add_option("--budget", a.budget, "Budget B");
  s->add_option("--n", a.n, "Population size")->capture_default_str();
  s->add_option("--seed", a.seed, "Population seed")->envname("PBPOLICY_SEED")->capture_default_str();
  s->add_option("--out", a.out, "Optional output directory for oracle.json");
}

int run_oracle(CLI::App* sub, OracleArgs& a) {
  apply_config(sub);
  require(sub->get_option("--budget")->count() > 0, "budget");
  const SimulatedPopulation pop = generate({parse_dgp(a.dgp), a.seed, a.n}, 1);
  const OraclePopulation op = pop.oracle();
  const OptimalRule rule = solve_eta_B(a.budget, op);
  json j = to_json(rule);
  j["dgp"] = a.dgp;
  j["n"] = a.n;
  j["seed"] = a.seed;
  j["beta_0"] = budget_curve_beta(0.0, op);
  std::cout << dump_json(j);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    save_json_atomic((fs::path(a.out) / "oracle.json").string(), j);
    echo_config(a.out, "oracle", {{"dgp", a.dgp}, {"budget", a.budget}, {"n", a.n}, {"seed", a.seed}, {"out", a.out}});
  }
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string dgp = "dgp1", out;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  auto* s = app.add_subcommand("simulate", "Draw a sample from a simulation design");
  s->add_option("--dgp", a.dgp, "dgp1 or dgp2")->capture_default_str();
  s->add_option("--n", a.n, "Sample size")->capture_default_str();
  s->add_option("--seed", a.seed, "Random seed")->envname("PBPOLICY_SEED")->capture_default_str();
  s->add_option("--threads", a.threads, "Worker threads, 0 = all cores")->envname("PBPOLICY_THREADS");
  s->add_option("--out", a.out, "Output directory for sample.csv and truth.json");
}

int run_simulate(CLI::App* sub, SimulateArgs& a) {
  apply_config(sub);
  require(!a.out.empty(), "out");
  const SimulatedPopulation pop = generate({parse_dgp(a.dgp), a.seed, a.n}, resolve_threads(a.threads));
  fs::create_directories(a.out);
  write_sample_csv((fs::path(a.out) / "sample.csv").string(), pop.sample);
  save_json_atomic((fs::path(a.out) / "truth.json").string(), hidden_truth_json(pop));
  echo_config(a.out, "simulate", {{"dgp", a.dgp}, {"n", a.n}, {"seed", a.seed}, {"out", a.out}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAC-Bayesian budget-constrained policy learning"};
  app.require_subcommand(1);
  app.add_option("--config", config_path, "JSON file of option values; flags take precedence");

  FitArgs fit;
  ScoreArgs score;
  StudyArgs study;
  BoundsArgs bounds;
  OracleArgs oracle;
  SimulateArgs simulate;
  add_fit(app, fit);
  add_score(app, score);
  add_study(app, study);
  add_bounds(app, bounds);
  add_oracle(app, oracle);
  add_simulate(app, simulate);
  for (auto* sub : app.get_subcommands({})) sub->add_option("--config", config_path, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "fit") return run_fit(sub, fit);
    if (name == "score") return run_score(sub, score);
    if (name == "study") return run_study_cmd(sub, study);
    if (name == "bounds") return run_bounds(sub, bounds);
    if (name == "oracle") return run_oracle(sub, oracle);
    if (name == "simulate") return run_simulate(sub, simulate);
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
