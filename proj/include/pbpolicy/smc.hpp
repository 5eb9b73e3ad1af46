#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "json.hpp"
#include "pbpolicy/core_data.hpp"
#include "pbpolicy/gibbs_posterior.hpp"
#include "pbpolicy/rng.hpp"

namespace pbpolicy {

struct TemperatureLadder {
  std::vector<double> lambdas;
  std::vector<double> us;
  std::vector<std::size_t> checkpoints;  // ascending step indices to harvest

  std::size_t steps() const { return lambdas.size(); }  // T + 1
  std::size_t final_step() const { return lambdas.size() - 1; }

  // (lambda_0, u_0) = (0, 0); componentwise non-decreasing with a strict
  // increase in at least one component per step; checkpoints in range.
  void validate() const;
};

constexpr double kDefaultLambdaCap = 1024.0;

// Piecewise-linear default schedule with T = 800, truncated at the first step
// whose lambda reaches lambda_final; the final pair is clamped to
// (lambda_final, u_final). The final step is always a checkpoint.
TemperatureLadder build_default_ladder(double u_final, double lambda_final, double lambda_cap = kDefaultLambdaCap);

// Lambda values the ladder passes through at each step (independent of u).
double default_ladder_lambda(std::size_t t);

// Cross-validation targets 4, 6, 8, 12, ..., 768, 1024: powers of two from 2^2
// to 2^10 and their midpoints.
std::vector<double> default_lambda_targets();

// For each target, the index of the step whose lambda is nearest (first on ties).
std::vector<std::size_t> nearest_steps(const TemperatureLadder& ladder, std::span<const double> targets);

nlohmann::json to_json(const TemperatureLadder& ladder);
TemperatureLadder ladder_from_json(const nlohmann::json& j);

struct WeightedParticles {
  std::size_t dim = 0;
  std::vector<double> thetas;   // row-major, particle i at [i * dim, (i + 1) * dim)
  std::vector<double> weights;  // sum to 1
  std::size_t step = 0;
  double lambda = 0.0;
  double u = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return weights.size(); }
  std::span<const double> theta(std::size_t i) const { return {thetas.data() + i * dim, dim}; }
  std::span<double> theta(std::size_t i) { return {thetas.data() + i * dim, dim}; }

  void validate() const;
};

nlohmann::json to_json(const WeightedParticles& p);
WeightedParticles particles_from_json(const nlohmann::json& j);

double ess(std::span<const double> weights);

// Normalizes log-weights in place into probabilities; returns the log of the
// normalizing sum. Throws RuntimeFailure when no weight is finite.
double normalize_log_weights(std::span<const double> log_weights, std::span<double> out);

enum class ResampleScheme { systematic, multinomial };

// Ancestor indices for N equally weighted offspring. Systematic: a single
// U[0, 1) offset shared by N evenly spaced positions, so particle j receives
// floor(N w_j) or ceil(N w_j) offspring.
std::vector<std::size_t> resample_systematic(std::span<const double> weights, Stream& rng);
std::vector<std::size_t> resample_multinomial(std::span<const double> weights, Stream& rng);
std::vector<std::size_t> resample(std::span<const double> weights, Stream& rng, ResampleScheme scheme);

WeightedParticles resample_particles(const WeightedParticles& particles, Stream& rng,
                                     ResampleScheme scheme = ResampleScheme::systematic);

// Target log density at a proposed point. The particle index lets callers
// stash per-particle side results of the evaluation.
using LogTarget = std::function<double(std::size_t particle, std::span<const double> theta)>;

struct MoveResult {
  std::vector<std::uint8_t> accepted;
  double acceptance_rate = 0.0;
};

// One random-walk Metropolis step per particle with N(0, covariance)
// increments. `log_targets` holds the target at the current points and is
// updated for accepted moves. Proposal noise for particle i comes from
// stream (seed, i, step, substep), so results do not depend on `threads`.
// The covariance must be symmetric positive semi-definite and finite.
MoveResult mh_move(WeightedParticles& particles, std::span<double> log_targets, const LogTarget& target,
                   const Eigen::MatrixXd& covariance, std::uint64_t seed, std::size_t step, std::size_t substep = 0,
                   unsigned threads = 1);

// Weighted sample covariance (weights sum to 1).
Eigen::MatrixXd weighted_covariance(const WeightedParticles& particles);

struct SMCConfig {
  std::size_t n_particles = 1000;
  double tau_ess = 0.5;
  std::size_t mh_steps_per_stage = 1;
  double covariance_scale_exponent = 0.9;
  double covariance_jitter = 1e-8;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  ResampleScheme scheme = ResampleScheme::systematic;
  bool normalized = true;

  void validate() const;
};

struct StepDiagnostics {
  std::size_t step = 0;
  double lambda = 0.0;
  double u = 0.0;
  double ess = 0.0;  // after reweighting
  bool resampled = false;
  double acceptance_rate = 0.0;
};

struct SMCResult {
  std::map<std::size_t, WeightedParticles> checkpoints;
  std::vector<StepDiagnostics> trace;
};

// Tempering SMC along the ladder. At step t: resample when ESS < tau N,
// reweight by the incremental weight evaluated at the step t-1 particles,
// then move with a random-walk Metropolis kernel targeting the step t
// posterior, proposal covariance = weighted particle covariance * t^-exponent
// + jitter I.
SMCResult run_smc(const IPWScores& scores, const FeatureMatrix& features, const Prior& prior,
                  const TemperatureLadder& ladder, const SMCConfig& config);

}  // namespace pbpolicy
