#include "pbpolicy/policy_rules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pbpolicy/error.hpp"
#include "pbpolicy/kernels.hpp"

namespace pbpolicy {

std::vector<double> vote_shares(const WeightedParticles& particles, const FeatureMatrix& features) {
  if (particles.dim != features.features()) throw ValidationError("rule and feature dimensions differ");
  std::vector<double> votes(features.observations(), 0.0);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if (particles.weights[i] == 0.0) continue;
    k.accumulate_votes(particles.theta(i).data(), particles.dim, features.data(), features.observations(),
                       particles.weights[i], votes.data());
  }
  for (double& v : votes) v = std::clamp(v, 0.0, 1.0);
  return votes;
}

GibbsRule::GibbsRule(WeightedParticles particles, FeatureMap feature_map)
    : particles_(std::move(particles)), map_(std::move(feature_map)) {
  particles_.validate();
  if (particles_.dim != map_.dimension()) throw ValidationError("particle dimension differs from feature dimension");
}

double GibbsRule::treat_probability(std::span<const double> x) const {
  const std::vector<std::vector<double>> one{std::vector<double>(x.begin(), x.end())};
  return treat_probabilities(one).front();
}

int GibbsRule::mv_decide(std::span<const double> x) const { return pbpolicy::mv_decide(treat_probability(x)); }

std::vector<double> GibbsRule::treat_probabilities(std::span<const std::vector<double>> xs) const {
  for (const auto& x : xs)
    if (x.size() != map_.input_dimension())
      throw ValidationError("covariate dimension " + std::to_string(x.size()) + " differs from rule's " +
                            std::to_string(map_.input_dimension()));
  return vote_shares(particles_, map_.transform_all(xs));
}

std::vector<std::uint8_t> GibbsRule::mv_decisions(std::span<const std::vector<double>> xs) const {
  const auto p = treat_probabilities(xs);
  std::vector<std::uint8_t> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = static_cast<std::uint8_t>(pbpolicy::mv_decide(p[i]));
  return out;
}

std::vector<std::uint8_t> GibbsRule::sample_assignments(std::span<const std::vector<double>> xs,
                                                        std::uint64_t seed) const {
  const auto p = treat_probabilities(xs);
  std::vector<std::uint8_t> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    Stream rng = make_stream(seed, StreamTag::assignment, i);
    out[i] = uniform01(rng) < p[i] ? 1 : 0;
  }
  return out;
}

nlohmann::json GibbsRule::to_json() const {
  return {{"particles", pbpolicy::to_json(particles_)}, {"feature_map", map_.to_json()}};
}

GibbsRule GibbsRule::from_json(const nlohmann::json& j) {
  if (!j.contains("particles") || !j.contains("feature_map")) throw ValidationError("rule needs particles and feature_map");
  return GibbsRule(particles_from_json(j.at("particles")), FeatureMap::from_json(j.at("feature_map")));
}

int mv_decide(double vote_share) { return vote_share > 0.5 ? 1 : 0; }

std::vector<double> mv_values(std::span<const double> shares) {
  std::vector<double> out(shares.size());
  for (std::size_t i = 0; i < shares.size(); ++i) out[i] = mv_decide(shares[i]);
  return out;
}

double rule_empirical_cost(const WeightedParticles& particles, const IPWScores& scores, const FeatureMatrix& features) {
  return empirical_welfare_cost(vote_shares(particles, features), scores).cost;
}

double rule_empirical_welfare(const WeightedParticles& particles, const IPWScores& scores,
                              const FeatureMatrix& features) {
  return empirical_welfare_cost(vote_shares(particles, features), scores).welfare;
}

double particle_average_cost(const WeightedParticles& particles, const IPWScores& scores,
                             const FeatureMatrix& features) {
  double s = 0.0;
  for (std::size_t i = 0; i < particles.size(); ++i)
    s += particles.weights[i] * empirical_welfare_cost(particles.theta(i), scores, features).cost;
  return s;
}

BatchPlan batch_assign(std::span<const double> unit_costs, std::span<const BatchRule> rules, double budget,
                       std::size_t n_bins, double min_cost) {
  if (rules.empty()) throw ValidationError("batch assignment needs at least one rule");
  if (!(budget > 0.0) || !std::isfinite(budget)) throw ValidationError("batch budget must be positive");
  if (n_bins < 1) throw ValidationError("need at least one cost bin");
  if (!(min_cost >= 0.0) || min_cost >= budget) throw ValidationError("minimal cost must lie in [0, budget)");
  const std::size_t m = unit_costs.size();
  for (const auto& r : rules)
    if (r.scores.size() != m) throw ValidationError("rule scores not aligned with candidates");

  BatchPlan plan;
  plan.treated.assign(m, 0);
  for (std::size_t b = 1; b <= n_bins; ++b)
    plan.bin_edges.push_back(b == n_bins ? budget
                                         : min_cost + (budget - min_cost) * static_cast<double>(b) /
                                                          static_cast<double>(n_bins));

  double cumulative = 0.0;
  std::vector<std::size_t> ranking(m);
  for (double edge : plan.bin_edges) {
    std::size_t pick = 0;
    for (std::size_t r = 1; r < rules.size(); ++r)
      if (std::abs(rules[r].estimated_cost - edge) < std::abs(rules[pick].estimated_cost - edge)) pick = r;
    plan.selected_rule.push_back(pick);

    const auto& s = rules[pick].scores;
    std::iota(ranking.begin(), ranking.end(), std::size_t{0});
    std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    for (std::size_t idx : ranking) {
      if (plan.treated[idx]) continue;
      if (cumulative + unit_costs[idx] > edge) break;
      cumulative += unit_costs[idx];
      plan.treated[idx] = 1;
      plan.order.push_back(idx);
    }
    plan.cost_at_close.push_back(cumulative);
  }
  plan.realized_cost = cumulative;
  return plan;
}

}  // namespace pbpolicy
