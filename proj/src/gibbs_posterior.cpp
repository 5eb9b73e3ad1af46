#include "pbpolicy/gibbs_posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "pbpolicy/error.hpp"

namespace pbpolicy {

void GibbsParams::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive and finite");
  if (!(u >= 0.0) || !std::isfinite(u)) throw ValidationError("u must be non-negative and finite");
}

double effective_lambda(const GibbsParams& params, double mean_delta_y) {
  params.validate();
  if (!params.normalized) return params.lambda;
  if (!(mean_delta_y > 0.0))
    throw ValidationError("normalized posterior needs a positive mean welfare score (got " +
                          std::to_string(mean_delta_y) + ")");
  return params.lambda / mean_delta_y;
}

double log_score(double welfare, double cost, const GibbsParams& params, double mean_delta_y) {
  return -effective_lambda(params, mean_delta_y) * (params.u * cost - welfare);
}

double log_score(std::span<const double> theta, const GibbsParams& params, const IPWScores& scores,
                 const FeatureMatrix& features) {
  const auto wc = empirical_welfare_cost(theta, scores, features);
  return log_score(wc.welfare, wc.cost, params, scores.mean_delta_y);
}

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

IsotropicNormalPrior::IsotropicNormalPrior(std::size_t q, double sigma) : q_(q), sigma_(sigma) {
  if (q == 0) throw ValidationError("prior dimension must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("prior sigma must be positive");
  log_norm_ = -0.5 * static_cast<double>(q) * (kLogTwoPi + 2.0 * std::log(sigma));
}

double IsotropicNormalPrior::log_density(std::span<const double> theta) const {
  double ss = 0.0;
  for (double t : theta) ss += t * t;
  return log_norm_ - 0.5 * ss / (sigma_ * sigma_);
}

void IsotropicNormalPrior::sample(Stream& rng, std::span<double> out) const {
  std::normal_distribution<double> z(0.0, 1.0);
  for (double& v : out) v = sigma_ * z(rng);
}

MixturePrior::MixturePrior(std::vector<std::vector<double>> centers, std::vector<double> masses, double sigma)
    : centers_(std::move(centers)), masses_(std::move(masses)), sigma_(sigma) {
  if (centers_.empty() || centers_.size() != masses_.size()) throw ValidationError("mixture needs aligned centers and masses");
  if (!(sigma > 0.0)) throw ValidationError("mixture sigma must be positive");
  q_ = centers_.front().size();
  double total = 0.0;
  for (std::size_t k = 0; k < centers_.size(); ++k) {
    if (centers_[k].size() != q_) throw ValidationError("mixture centers differ in dimension");
    if (!(masses_[k] > 0.0)) throw ValidationError("mixture masses must be positive");
    total += masses_[k];
  }
  double run = 0.0;
  for (double& m : masses_) {
    m /= total;
    run += m;
    cumulative_.push_back(run);
    log_masses_.push_back(std::log(m));
  }
  cumulative_.back() = 1.0;
  log_norm_ = -0.5 * static_cast<double>(q_) * (kLogTwoPi + 2.0 * std::log(sigma));
}

double MixturePrior::log_density(std::span<const double> theta) const {
  std::vector<double> terms(centers_.size());
  for (std::size_t k = 0; k < centers_.size(); ++k) {
    double ss = 0.0;
    for (std::size_t j = 0; j < q_; ++j) {
      const double d = theta[j] - centers_[k][j];
      ss += d * d;
    }
    terms[k] = log_masses_[k] + log_norm_ - 0.5 * ss / (sigma_ * sigma_);
  }
  return log_sum_exp(terms);
}

void MixturePrior::sample(Stream& rng, std::span<double> out) const {
  const double v = uniform01(rng);
  const std::size_t k = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), v) -
                                                 cumulative_.begin());
  const auto& c = centers_[std::min(k, centers_.size() - 1)];
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t j = 0; j < q_; ++j) out[j] = c[j] + sigma_ * z(rng);
}

double GridPosterior::expected_cost() const {
  double s = 0.0;
  for (std::size_t j = 0; j < probabilities.size(); ++j) s += probabilities[j] * cost[j];
  return s;
}

double GridPosterior::expected_welfare() const {
  double s = 0.0;
  for (std::size_t j = 0; j < probabilities.size(); ++j) s += probabilities[j] * welfare[j];
  return s;
}

GridPosterior grid_posterior(std::vector<double> welfare, std::vector<double> cost, std::vector<double> prior_masses,
                             const GibbsParams& params, double mean_delta_y) {
  const std::size_t m = welfare.size();
  if (m == 0) throw ValidationError("grid is empty");
  if (cost.size() != m || prior_masses.size() != m) throw ValidationError("grid functionals and masses not aligned");
  double total = 0.0;
  for (double p : prior_masses) {
    if (!(p > 0.0)) throw ValidationError("prior masses must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("prior masses must sum to 1");

  GridPosterior g;
  g.log_weights.resize(m);
  for (std::size_t j = 0; j < m; ++j)
    g.log_weights[j] = std::log(prior_masses[j]) + log_score(welfare[j], cost[j], params, mean_delta_y);
  const double lse = log_sum_exp(g.log_weights);
  if (!std::isfinite(lse)) throw RuntimeFailure("grid posterior has no finite log-weight");
  g.probabilities.resize(m);
  for (std::size_t j = 0; j < m; ++j) g.probabilities[j] = std::exp(g.log_weights[j] - lse);
  g.welfare = std::move(welfare);
  g.cost = std::move(cost);
  g.prior_masses = std::move(prior_masses);
  return g;
}

GridPosterior grid_posterior(const std::vector<std::vector<double>>& grid, std::vector<double> prior_masses,
                             const GibbsParams& params, const IPWScores& scores, const FeatureMatrix& features) {
  std::vector<double> w(grid.size()), c(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto wc = empirical_welfare_cost(grid[j], scores, features);
    w[j] = wc.welfare;
    c[j] = wc.cost;
  }
  GridPosterior g = grid_posterior(std::move(w), std::move(c), std::move(prior_masses), params, scores.mean_delta_y);
  g.grid = grid;
  return g;
}

nlohmann::json to_json(const GridPosterior& g) {
  return {{"grid", g.grid},           {"prior_masses", g.prior_masses}, {"welfare", g.welfare},
          {"cost", g.cost},           {"log_weights", g.log_weights},   {"probabilities", g.probabilities}};
}

GridPosterior grid_posterior_from_json(const nlohmann::json& j) {
  GridPosterior g;
  try {
    g.grid = j.at("grid").get<std::vector<std::vector<double>>>();
    g.prior_masses = j.at("prior_masses").get<std::vector<double>>();
    g.welfare = j.at("welfare").get<std::vector<double>>();
    g.cost = j.at("cost").get<std::vector<double>>();
    g.log_weights = j.at("log_weights").get<std::vector<double>>();
    g.probabilities = j.at("probabilities").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed grid posterior: ") + e.what());
  }
  const std::size_t m = g.probabilities.size();
  if (g.prior_masses.size() != m || g.welfare.size() != m || g.cost.size() != m || g.log_weights.size() != m ||
      (!g.grid.empty() && g.grid.size() != m))
    throw ValidationError("grid posterior arrays have inconsistent lengths");
  return g;
}

BudgetEvaluator grid_budget_evaluator(std::vector<double> welfare, std::vector<double> cost,
                                      std::vector<double> prior_masses, bool normalized, double mean_delta_y) {
  return [welfare = std::move(welfare), cost = std::move(cost), masses = std::move(prior_masses), normalized,
          mean_delta_y](double lambda, double u) {
    return grid_posterior(welfare, cost, masses, GibbsParams{lambda, u, normalized}, mean_delta_y).expected_cost();
  };
}

double grid_budget_derivative(const GridPosterior& g, const GibbsParams& params, double mean_delta_y) {
  const double mean = g.expected_cost();
  double var = 0.0;
  for (std::size_t j = 0; j < g.probabilities.size(); ++j) {
    const double d = g.cost[j] - mean;
    var += g.probabilities[j] * d * d;
  }
  return -effective_lambda(params, mean_delta_y) * var;
}

std::vector<std::pair<double, double>> empirical_budget_curve(std::span<const double> u_grid, double lambda,
                                                              const BudgetEvaluator& evaluator) {
  std::vector<std::pair<double, double>> out;
  out.reserve(u_grid.size());
  for (std::size_t k = 0; k < u_grid.size(); ++k) {
    if (!(u_grid[k] >= 0.0)) throw ValidationError("u grid must be non-negative");
    if (k > 0 && u_grid[k] < u_grid[k - 1]) throw ValidationError("u grid must be sorted ascending");
    out.emplace_back(u_grid[k], evaluator(lambda, u_grid[k]));
  }
  return out;
}

BudgetEvaluator interpolated_budget_evaluator(std::vector<std::pair<double, double>> curve) {
  if (curve.empty()) throw ValidationError("budget curve is empty");
  for (std::size_t k = 1; k < curve.size(); ++k)
    if (!(curve[k].first > curve[k - 1].first)) throw ValidationError("budget curve u values must increase");
  return [curve = std::move(curve)](double, double u) {
    if (u <= curve.front().first) return curve.front().second;
    if (u >= curve.back().first) return curve.back().second;
    const auto it = std::upper_bound(curve.begin(), curve.end(), u,
                                     [](double v, const std::pair<double, double>& p) { return v < p.first; });
    const auto& [u1, l1] = *it;
    const auto& [u0, l0] = *(it - 1);
    return l0 + (l1 - l0) * (u - u0) / (u1 - u0);
  };
}

double solve_u_hat(double budget, double lambda, const BudgetEvaluator& evaluator, const UHatOptions& options) {
  if (!std::isfinite(budget)) throw ValidationError("budget must be finite");
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  const double at_zero = evaluator(lambda, 0.0);
  if (at_zero <= budget) return 0.0;

  double lo = 0.0;
  double hi = 1.0;
  double f_hi = evaluator(lambda, hi);
  while (f_hi > budget) {
    if (hi >= options.u_cap)
      throw ValidationError("budget " + std::to_string(budget) + " is infeasible: posterior cost stays at " +
                            std::to_string(f_hi) + " up to u = " + std::to_string(options.u_cap));
    lo = hi;
    hi = std::min(2.0 * hi, options.u_cap);
    f_hi = evaluator(lambda, hi);
  }
  if (std::abs(f_hi - budget) <= options.tolerance) return hi;

  double best_u = hi;
  double best_gap = std::abs(f_hi - budget);
  for (int it = 0; it < options.max_bisections; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f = evaluator(lambda, mid);
    const double gap = std::abs(f - budget);
    if (gap < best_gap) {
      best_gap = gap;
      best_u = mid;
    }
    if (gap <= options.tolerance) return mid;
    if (f > budget)
      lo = mid;
    else
      hi = mid;
  }
  return best_u;
}

}  // namespace pbpolicy
