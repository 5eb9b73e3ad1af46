#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pbpolicy/core_data.hpp"
#include "pbpolicy/dgp.hpp"
#include "pbpolicy/smc.hpp"

namespace pbpolicy {

struct GridSpec {
  std::vector<double> u_grid;
  std::vector<double> lambda_targets;

  // u in {0} plus 40 evenly spaced values from 0.2 to 4; lambda targets
  // 4, 6, 8, 12, ..., 768, 1024.
  static GridSpec defaults();
  // {0} plus `count` evenly spaced values from u_min to u_max inclusive.
  static std::vector<double> u_grid_linspace(double u_min, double u_max, std::size_t count);
  void validate() const;
};

// Training data prepared for SMC: IPW scores and normalized features.
struct FitData {
  IPWScores scores;
  FeatureMatrix features;
};

FitData prepare_fit_data(const Sample& sample, const FeatureMap& map);

// Seeded shuffle then contiguous blocks; returns the row indices of each fold.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

enum class RuleKind { gibbs, mv };

struct CrossValidation {
  double u = 0.0;
  std::vector<double> lambdas;              // candidate ladder values
  std::vector<double> objective_gibbs;      // mean hold-out W_n - u K_n per candidate
  std::vector<double> objective_mv;
  std::vector<double> heldout_cost_gibbs;   // mean hold-out K_n per candidate
  std::vector<double> heldout_cost_mv;
  std::vector<double> heldout_gain_gibbs;   // mean hold-out W_n per candidate
  std::vector<double> heldout_gain_mv;
  std::size_t best_gibbs = 0;
  std::size_t best_mv = 0;

  double lambda_for(RuleKind kind) const { return lambdas[kind == RuleKind::gibbs ? best_gibbs : best_mv]; }
};

// One tempering run per fold along the default ladder for u, harvesting the
// checkpoints nearest the lambda targets. Ties in the objective go to the
// smaller lambda.
CrossValidation cross_validate(double u, std::span<const double> lambda_targets, const Sample& training,
                               const FeatureMap& map, std::size_t folds, const SMCConfig& smc, std::uint64_t seed,
                               double prior_sigma = 1.0);

double cross_validate_lambda(double u, std::span<const double> lambda_targets, const Sample& training,
                             const FeatureMap& map, std::size_t folds, RuleKind kind, const SMCConfig& smc,
                             std::uint64_t seed, double prior_sigma = 1.0);

class CostCurve {
 public:
  CostCurve() = default;
  // Sorts by cost and keeps the largest gain among equal costs. Needs at
  // least two distinct costs.
  CostCurve(std::vector<std::pair<double, double>> points, std::string method);

  const std::vector<std::pair<double, double>>& points() const { return points_; }
  const std::string& method() const { return method_; }
  double min_cost() const { return points_.front().first; }
  double max_cost() const { return points_.back().first; }

  // Linear interpolation; costs outside the covered range clamp to the end
  // points and set *clamped when provided.
  double gain_at(double cost, bool* clamped = nullptr) const;

 private:
  std::vector<std::pair<double, double>> points_;
  std::string method_;
};

CostCurve build_cost_curve(std::vector<std::pair<double, double>> points, std::string method = "");

struct AveragedCurve {
  std::string method;
  std::vector<double> costs;
  std::vector<double> gain_mean;
  std::vector<double> gain_se;
  std::size_t n_reps = 0;

  // Interpolates the averaged gains.
  double gain_at(double cost) const;
};

AveragedCurve average_curves(std::span<const CostCurve> curves, std::span<const double> query_costs);

// Greedy batch deployment by descending score (index ascending on ties):
// only positive scores are eligible and assignment stops at the first unit
// whose cost would exceed the budget. Costs are per-unit contributions to
// the population average cost.
GainCost greedy_batch(std::span<const double> scores, std::span<const double> unit_costs,
                      std::span<const double> unit_gains, double budget);

GainCost oracle_ratio_baseline(const SimulatedPopulation& population, double budget);
GainCost oracle_cate_baseline(const SimulatedPopulation& population, double budget);

struct StudyConfig {
  DgpId dgp = DgpId::dgp1;
  std::size_t replications = 20;
  std::size_t n = 1000;
  std::size_t n_test = 10000;
  std::size_t folds = 2;
  std::size_t cost_bins = 20;
  int poly_degree = 2;
  double prior_sigma = 1.0;
  double curve_step = 0.01;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  GridSpec grids = GridSpec::defaults();
  SMCConfig smc;

  void validate() const;
  nlohmann::json to_json() const;
};

struct UResult {
  double u = 0.0;
  double lambda_gibbs = 0.0;
  double lambda_mv = 0.0;
  double est_cost_gibbs = 0.0;  // cross-validated K_n
  double est_cost_mv = 0.0;
  double est_gain_gibbs = 0.0;  // cross-validated W_n
  double est_gain_mv = 0.0;
  double train_cost_gibbs = 0.0;  // K_n of the full-sample fit
  GainCost true_gibbs;
  GainCost true_mv;
  GainCost oracle_ratio_at_gibbs_cost;
  GainCost oracle_ratio_at_mv_cost;
};

struct ReplicationResult {
  std::size_t index = 0;
  std::uint64_t data_seed = 0;
  std::vector<UResult> per_u;
  std::vector<double> batch_levels;
  std::vector<GainCost> batch;
  std::vector<GainCost> oracle_ratio;
  std::vector<GainCost> oracle_cate;
  std::map<std::string, CostCurve> curves;

  nlohmann::json to_json() const;
};

struct StudyReport {
  StudyConfig config;
  double always_treat_cost = 0.0;
  double random_slope = 0.0;  // E[delta_y] / E[C1] on the test population
  std::vector<ReplicationResult> replications;
  std::map<std::string, AveragedCurve> curves;

  nlohmann::json summary() const;
};

// Method tags used in file names.
inline constexpr const char* kMethods[] = {"pb_sa", "pb_mv", "pb_batch", "oracle_ratio", "oracle_cate", "random"};

ReplicationResult run_replication(const StudyConfig& config, std::size_t index, const SimulatedPopulation& test);
StudyReport run_study(const StudyConfig& config, bool verbose = false);

// cost_curves_<method>.csv, replication_<k>.json, study_config.json and
// study_summary.json under `out_dir`.
void write_study_outputs(const StudyReport& report, const std::string& out_dir);

}  // namespace pbpolicy
