#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pbpolicy/core_data.hpp"
#include "pbpolicy/smc.hpp"

namespace pbpolicy {

// Posterior vote share sum_i w_i 1{phi' theta_i > 0} at every column of `features`.
std::vector<double> vote_shares(const WeightedParticles& particles, const FeatureMatrix& features);

// Stochastic rule treating x with probability equal to the vote share; the
// majority-vote rule treats when that share is strictly above 1/2.
class GibbsRule {
 public:
  GibbsRule() = default;
  GibbsRule(WeightedParticles particles, FeatureMap feature_map);

  const WeightedParticles& particles() const { return particles_; }
  const FeatureMap& feature_map() const { return map_; }

  double treat_probability(std::span<const double> x) const;
  int mv_decide(std::span<const double> x) const;
  std::vector<double> treat_probabilities(std::span<const std::vector<double>> xs) const;
  std::vector<std::uint8_t> mv_decisions(std::span<const std::vector<double>> xs) const;

  // One Bernoulli draw per row from stream (seed, row).
  std::vector<std::uint8_t> sample_assignments(std::span<const std::vector<double>> xs, std::uint64_t seed) const;

  nlohmann::json to_json() const;
  static GibbsRule from_json(const nlohmann::json& j);

 private:
  WeightedParticles particles_;
  FeatureMap map_;
};

int mv_decide(double vote_share);
std::vector<double> mv_values(std::span<const double> vote_shares);

// (1/n) sum_i delta_{c,i} * vote_share(X_i).
double rule_empirical_cost(const WeightedParticles& particles, const IPWScores& scores, const FeatureMatrix& features);
double rule_empirical_welfare(const WeightedParticles& particles, const IPWScores& scores,
                              const FeatureMatrix& features);
// sum_i w_i K_n(theta_i); equal to rule_empirical_cost up to summation order.
double particle_average_cost(const WeightedParticles& particles, const IPWScores& scores,
                             const FeatureMatrix& features);

// One candidate scoring rule for batch deployment: its estimated cost and
// its vote share at every candidate.
struct BatchRule {
  double estimated_cost = 0.0;
  std::vector<double> scores;
  std::string label;
};

struct BatchPlan {
  std::vector<double> bin_edges;                // ascending, last = budget
  std::vector<std::size_t> selected_rule;       // per bin
  std::vector<double> cost_at_close;            // cumulative cost when each bin closed
  std::vector<std::size_t> order;               // treated candidates in assignment order
  std::vector<std::uint8_t> treated;
  double realized_cost = 0.0;
};

// Equal cost bins from min_cost to budget. For each edge, pick the rule whose
// estimated cost is nearest the edge (absolute distance, first on ties), rank
// untreated candidates by that rule's score (descending, index ascending on
// ties) and treat in order while the cumulative cost stays within the edge;
// the bin closes at the first candidate that would overshoot.
BatchPlan batch_assign(std::span<const double> unit_costs, std::span<const BatchRule> rules, double budget,
                       std::size_t n_bins, double min_cost = 0.0);

}  // namespace pbpolicy
