#include "pbpolicy/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pbpolicy/error.hpp"

namespace pbpolicy {

void OraclePopulation::validate() const {
  if (delta_y.empty()) throw ValidationError("oracle population is empty");
  if (delta_y.size() != delta_c.size()) throw ValidationError("oracle population arrays differ in length");
  for (std::size_t i = 0; i < delta_y.size(); ++i)
    if (!std::isfinite(delta_y[i]) || !std::isfinite(delta_c[i]))
      throw ValidationError("oracle population has non-finite values");
}

OraclePopulation make_oracle_population(std::span<const std::vector<double>> xs, const ConditionalFn& cate,
                                        const ConditionalFn& catc) {
  OraclePopulation p;
  p.delta_y.reserve(xs.size());
  p.delta_c.reserve(xs.size());
  for (const auto& x : xs) {
    p.delta_y.push_back(cate(x));
    p.delta_c.push_back(catc(x));
  }
  p.validate();
  return p;
}

namespace {

// Treatment at threshold b in ratio form, which is exact and consistent with
// the tie classification below: for delta_c > 0 treat iff ratio > b, for
// delta_c < 0 iff ratio < b, for delta_c = 0 iff delta_y > 0.
enum class Side { above, below, tie };

Side classify(double dy, double dc, double b) {
  if (dc == 0.0) return dy > 0.0 ? Side::above : Side::below;
  const double r = dy / dc;
  if (r == b) return Side::tie;
  if (dc > 0.0) return r > b ? Side::above : Side::below;
  return r < b ? Side::above : Side::below;
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double budget_curve_beta(double b, const OraclePopulation& pop) {
  pop.validate();
  double s = 0.0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double dy = pop.delta_y[i], dc = pop.delta_c[i];
    // A tie means delta_y == b delta_c, where the strict indicator is 0.
    if (classify(dy, dc, b) == Side::above) s += dc;
  }
  return s / static_cast<double>(pop.size());
}

std::vector<double> optimal_rule_values(const OptimalRule& rule, const OraclePopulation& pop) {
  std::vector<double> f(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double dy = pop.delta_y[i], dc = pop.delta_c[i];
    switch (classify(dy, dc, rule.eta)) {
      case Side::above:
        f[i] = 1.0;
        break;
      case Side::below:
        f[i] = 0.0;
        break;
      case Side::tie:
        f[i] = dc > 0.0 ? rule.a1 : rule.a2;
        break;
    }
  }
  return f;
}

OptimalRule solve_eta_B(double budget, const OraclePopulation& pop) {
  pop.validate();
  if (!std::isfinite(budget)) throw ValidationError("budget must be finite");
  const std::size_t m = pop.size();
  const double nd = static_cast<double>(m);

  double floor_cost = 0.0;
  for (double dc : pop.delta_c)
    if (dc < 0.0) floor_cost += dc;
  floor_cost /= nd;
  if (!(budget > floor_cost))
    throw ValidationError("budget " + std::to_string(budget) + " is not above the minimal achievable cost " +
                          std::to_string(floor_cost));

  OptimalRule rule;
  rule.budget = budget;
  const double beta0 = budget_curve_beta(0.0, pop);
  if (beta0 <= budget) {
    rule.eta = 0.0;
    rule.constrained = false;
  } else {
    // Candidate thresholds: positive ratios. beta is constant between them,
    // so eta is the smallest candidate r with beta(r) <= B or beta(r+) <= B.
    std::vector<double> ratios;
    for (std::size_t i = 0; i < m; ++i)
      if (pop.delta_c[i] != 0.0) {
        const double r = pop.delta_y[i] / pop.delta_c[i];
        if (r > 0.0) ratios.push_back(r);
      }
    std::sort(ratios.begin(), ratios.end());
    ratios.erase(std::unique(ratios.begin(), ratios.end()), ratios.end());
    if (ratios.empty()) throw RuntimeFailure("no threshold brings the optimal rule within budget");

    // Sweep: per distinct ratio r, positive-cost units with ratio r leave at
    // b = r and negative-cost units with ratio r enter just after r.
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> key(m, -1.0);
    for (std::size_t i = 0; i < m; ++i)
      if (pop.delta_c[i] != 0.0) key[i] = pop.delta_y[i] / pop.delta_c[i];
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });

    double beta = beta0 * nd;  // running sum, beta(b) for b in the current open gap
    std::size_t pos = 0;
    while (pos < m && key[order[pos]] <= 0.0) ++pos;
    bool found = false;
    for (double r : ratios) {
      double leave = 0.0, enter = 0.0;
      while (pos < m && key[order[pos]] == r) {
        const double dc = pop.delta_c[order[pos]];
        if (dc > 0.0)
          leave += dc;
        else
          enter += dc;
        ++pos;
      }
      const double at_r = beta - leave;
      const double after_r = at_r + enter;
      if (at_r <= budget * nd || after_r <= budget * nd) {
        rule.eta = r;
        found = true;
        break;
      }
      beta = after_r;
    }
    if (!found) throw RuntimeFailure("threshold sweep found no feasible multiplier");
    rule.constrained = true;

    // Tie fractions from exact sums at eta: beta(eta) is the strict rule's
    // cost; positive-cost ties add up to tie_pos, negative-cost ties tie_neg.
    double strict = 0.0, tie_pos = 0.0, tie_neg = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double dc = pop.delta_c[i];
      switch (classify(pop.delta_y[i], dc, rule.eta)) {
        case Side::above:
          strict += dc;
          break;
        case Side::tie:
          (dc > 0.0 ? tie_pos : tie_neg) += dc;
          break;
        case Side::below:
          break;
      }
    }
    strict /= nd;
    tie_pos /= nd;
    tie_neg /= nd;
    if (strict < budget && tie_pos > 0.0)
      rule.a1 = std::clamp((budget - strict) / tie_pos, 0.0, 1.0);
    else if (strict > budget && tie_neg < 0.0)
      rule.a2 = std::clamp((strict - budget) / -tie_neg, 0.0, 1.0);
  }

  const auto f = optimal_rule_values(rule, pop);
  double w = 0.0, c = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    w += pop.delta_y[i] * f[i];
    c += pop.delta_c[i] * f[i];
  }
  rule.gain = w / nd;
  rule.cost = c / nd;
  return rule;
}

double regret_under_budget(std::span<const double> f, const OptimalRule& rule, const OraclePopulation& pop) {
  if (f.size() != pop.size()) throw ValidationError("rule values not aligned with population");
  const auto fs = optimal_rule_values(rule, pop);
  std::vector<double> terms(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) terms[i] = pop.delta_y[i] * (fs[i] - f[i]);
  return mean(terms);
}

double mv_loss_L_B(std::span<const double> f, const OptimalRule& rule, const OraclePopulation& pop) {
  if (f.size() != pop.size()) throw ValidationError("rule values not aligned with population");
  const auto fs = optimal_rule_values(rule, pop);
  std::vector<double> terms(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    // Ties carry zero margin by construction; the product form would leave
    // rounding residue there.
    const double margin =
        classify(pop.delta_y[i], pop.delta_c[i], rule.eta) == Side::tie ? 0.0 : pop.delta_y[i] - rule.eta * pop.delta_c[i];
    terms[i] = margin * (fs[i] - f[i]);
  }
  return mean(terms);
}

nlohmann::json to_json(const OptimalRule& rule) {
  return {{"B", rule.budget},       {"eta_B", rule.eta},           {"a1", rule.a1},
          {"a2", rule.a2},          {"constrained", rule.constrained}, {"cost_of_optimal", rule.cost},
          {"gain_of_optimal", rule.gain}};
}

}  // namespace pbpolicy
