#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pbpolicy/core_data.hpp"
#include "pbpolicy/rng.hpp"

namespace pbpolicy {

struct GibbsParams {
  double lambda = 1.0;
  double u = 0.0;
  // Divide W_n and K_n by the sample mean of delta_y before tilting.
  bool normalized = false;

  void validate() const;
};

// Inverse temperature actually applied to (W_n - u K_n). Normalizing by
// m = mean(delta_y) is the same as running the raw posterior at lambda / m.
// Normalized mode requires m > 0; a non-positive mean would reverse the tilt.
double effective_lambda(const GibbsParams& params, double mean_delta_y);

// -lambda (u K - W) for precomputed functionals.
double log_score(double welfare, double cost, const GibbsParams& params, double mean_delta_y);
double log_score(std::span<const double> theta, const GibbsParams& params, const IPWScores& scores,
                 const FeatureMatrix& features);

class Prior {
 public:
  virtual ~Prior() = default;
  virtual std::size_t dimension() const = 0;
  virtual double log_density(std::span<const double> theta) const = 0;
  virtual void sample(Stream& rng, std::span<double> out) const = 0;
};

// N(0, sigma^2 I_q).
class IsotropicNormalPrior final : public Prior {
 public:
  IsotropicNormalPrior(std::size_t q, double sigma);

  std::size_t dimension() const override { return q_; }
  double sigma() const { return sigma_; }
  double log_density(std::span<const double> theta) const override;
  void sample(Stream& rng, std::span<double> out) const override;

 private:
  std::size_t q_;
  double sigma_;
  double log_norm_;
};

// Finite mixture of N(center_k, sigma^2 I). With a small sigma this embeds a
// discrete prior over a policy grid into R^q.
class MixturePrior final : public Prior {
 public:
  MixturePrior(std::vector<std::vector<double>> centers, std::vector<double> masses, double sigma);

  std::size_t dimension() const override { return q_; }
  double log_density(std::span<const double> theta) const override;
  void sample(Stream& rng, std::span<double> out) const override;

 private:
  std::size_t q_;
  std::vector<std::vector<double>> centers_;
  std::vector<double> masses_;
  std::vector<double> cumulative_;
  std::vector<double> log_masses_;
  double sigma_;
  double log_norm_;
};

// Exact posterior over a finite policy grid.
struct GridPosterior {
  std::vector<std::vector<double>> grid;
  std::vector<double> prior_masses;
  std::vector<double> welfare;  // W_n at each grid point
  std::vector<double> cost;     // K_n at each grid point
  std::vector<double> log_weights;  // log prior mass + log score, unnormalized
  std::vector<double> probabilities;

  double expected_cost() const;
  double expected_welfare() const;
};

// Probabilities from precomputed functionals; no features needed.
GridPosterior grid_posterior(std::vector<double> welfare, std::vector<double> cost, std::vector<double> prior_masses,
                             const GibbsParams& params, double mean_delta_y);
GridPosterior grid_posterior(const std::vector<std::vector<double>>& grid, std::vector<double> prior_masses,
                             const GibbsParams& params, const IPWScores& scores, const FeatureMatrix& features);

nlohmann::json to_json(const GridPosterior& g);
GridPosterior grid_posterior_from_json(const nlohmann::json& j);

// Posterior-expected cost Lambda-hat(u) at a given lambda.
using BudgetEvaluator = std::function<double(double lambda, double u)>;

// Exact evaluator on a grid with fixed functionals.
BudgetEvaluator grid_budget_evaluator(std::vector<double> welfare, std::vector<double> cost,
                                      std::vector<double> prior_masses, bool normalized, double mean_delta_y);

// d/du Lambda-hat(u) = -lambda_eff * Var_rho(K_n) on a grid.
double grid_budget_derivative(const GridPosterior& g, const GibbsParams& params, double mean_delta_y);

std::vector<std::pair<double, double>> empirical_budget_curve(std::span<const double> u_grid, double lambda,
                                                              const BudgetEvaluator& evaluator);

// Piecewise-linear interpolant through (u, Lambda-hat(u)) points, clamped at
// both ends. Used when Lambda-hat is only available on a u grid.
BudgetEvaluator interpolated_budget_evaluator(std::vector<std::pair<double, double>> curve);

struct UHatOptions {
  double tolerance = 1e-8;
  double u_cap = 1048576.0;  // 2^20
  int max_bisections = 400;
};

// 0 when Lambda-hat(0) <= B, otherwise the root of Lambda-hat(u) = B.
// Throws ValidationError when no u <= u_cap brings the cost below B.
double solve_u_hat(double budget, double lambda, const BudgetEvaluator& evaluator, const UHatOptions& options = {});

}  // namespace pbpolicy
