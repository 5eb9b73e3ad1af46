#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"

namespace pbpolicy {

// Conditional treatment effect and cost effect evaluated on a frozen
// evaluation population; population expectations are averages over it.
struct OraclePopulation {
  std::vector<double> delta_y;
  std::vector<double> delta_c;

  std::size_t size() const { return delta_y.size(); }
  void validate() const;
};

using ConditionalFn = std::function<double(std::span<const double>)>;

OraclePopulation make_oracle_population(std::span<const std::vector<double>> xs, const ConditionalFn& cate,
                                        const ConditionalFn& catc);

// E[delta_c 1{delta_y > b delta_c}].
double budget_curve_beta(double b, const OraclePopulation& pop);

// f(x) = 1{delta_y > eta delta_c} + a1 1{tie, delta_c > 0} + a2 1{tie, delta_c < 0}.
struct OptimalRule {
  double budget = 0.0;
  double eta = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  bool constrained = false;  // false when the unconstrained rule already fits the budget
  double cost = 0.0;         // K(f*_B) on the population
  double gain = 0.0;         // W(f*_B) on the population
};

// Exact on a discrete population: eta_B = inf{b >= 0 : beta(b) <= B} is one
// of the ratios delta_y / delta_c, and the tie fractions are chosen so the
// rule spends exactly B. Throws ValidationError if B is not above
// E[delta_c 1{delta_c < 0}].
OptimalRule solve_eta_B(double budget, const OraclePopulation& pop);

std::vector<double> optimal_rule_values(const OptimalRule& rule, const OraclePopulation& pop);

// E[delta_y (f*_B - f)].
double regret_under_budget(std::span<const double> f, const OptimalRule& rule, const OraclePopulation& pop);
// E[(delta_y - eta delta_c)(f*_B - f)].
double mv_loss_L_B(std::span<const double> f, const OptimalRule& rule, const OraclePopulation& pop);

nlohmann::json to_json(const OptimalRule& rule);

}  // namespace pbpolicy
