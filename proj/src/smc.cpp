#include "pbpolicy/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pbpolicy/error.hpp"
#include "pbpolicy/parallel.hpp"

namespace pbpolicy {

namespace {

struct Segment {
  std::size_t t0, t1;
  double a, b;
};

// Knots of the default schedule; u reaches its final value at step 200.
constexpr Segment kSegments[] = {
    {0, 200, 0.0, 4.0},
    {200, 320, 4.0, 32.0},
    {320, 470, 32.0, 256.0},
    {470, 800, 256.0, 1024.0},
};
constexpr std::size_t kDefaultT = 800;
constexpr std::size_t kURampEnd = 200;

}  // namespace

double default_ladder_lambda(std::size_t t) {
  for (const auto& s : kSegments)
    if (t <= s.t1) return s.a + (s.b - s.a) * static_cast<double>(t - s.t0) / static_cast<double>(s.t1 - s.t0);
  return kSegments[3].b;
}

void TemperatureLadder::validate() const {
  if (lambdas.empty() || lambdas.size() != us.size()) throw ValidationError("ladder needs aligned lambda and u steps");
  if (lambdas.front() != 0.0 || us.front() != 0.0) throw ValidationError("ladder must start at (0, 0)");
  for (std::size_t t = 1; t < lambdas.size(); ++t) {
    if (!std::isfinite(lambdas[t]) || !std::isfinite(us[t])) throw ValidationError("ladder values must be finite");
    const bool non_decreasing = lambdas[t] >= lambdas[t - 1] && us[t] >= us[t - 1];
    const bool strict = lambdas[t] > lambdas[t - 1] || us[t] > us[t - 1];
    if (!non_decreasing || !strict)
      throw ValidationError("ladder must increase at every step (violated at step " + std::to_string(t) + ")");
  }
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (checkpoints[k] >= lambdas.size()) throw ValidationError("checkpoint beyond the end of the ladder");
    if (k > 0 && checkpoints[k] <= checkpoints[k - 1]) throw ValidationError("checkpoints must be strictly ascending");
  }
}

TemperatureLadder build_default_ladder(double u_final, double lambda_final, double lambda_cap) {
  if (!(u_final >= 0.0) || !std::isfinite(u_final)) throw ValidationError("u_final must be non-negative");
  if (!(lambda_final > 0.0) || lambda_final > lambda_cap)
    throw ValidationError("lambda_final must lie in (0, " + std::to_string(lambda_cap) + "]");
  TemperatureLadder l;
  for (std::size_t t = 0; t <= kDefaultT; ++t) {
    const double lam = default_ladder_lambda(t);
    const double u = t >= kURampEnd ? u_final : u_final * static_cast<double>(t) / static_cast<double>(kURampEnd);
    l.lambdas.push_back(lam);
    l.us.push_back(u);
    if (lam >= lambda_final) break;
  }
  // lambda_cap above the schedule's end: extend with a single final step.
  if (l.lambdas.back() < lambda_final) {
    l.lambdas.push_back(lambda_final);
    l.us.push_back(u_final);
  }
  l.lambdas.back() = lambda_final;
  l.us.back() = u_final;
  l.checkpoints = {l.final_step()};
  l.validate();
  return l;
}

std::vector<double> default_lambda_targets() {
  std::vector<double> out;
  for (int k = 2; k <= 10; ++k) {
    out.push_back(std::ldexp(1.0, k));
    if (k < 10) out.push_back(1.5 * std::ldexp(1.0, k));
  }
  return out;
}

std::vector<std::size_t> nearest_steps(const TemperatureLadder& ladder, std::span<const double> targets) {
  std::vector<std::size_t> out;
  out.reserve(targets.size());
  for (double target : targets) {
    std::size_t best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < ladder.steps(); ++t) {
      const double gap = std::abs(ladder.lambdas[t] - target);
      if (gap < best_gap) {
        best_gap = gap;
        best = t;
      }
    }
    out.push_back(best);
  }
  return out;
}

nlohmann::json to_json(const TemperatureLadder& ladder) {
  return {{"lambdas", ladder.lambdas}, {"us", ladder.us}, {"checkpoints", ladder.checkpoints}};
}

TemperatureLadder ladder_from_json(const nlohmann::json& j) {
  TemperatureLadder l;
  try {
    l.lambdas = j.at("lambdas").get<std::vector<double>>();
    l.us = j.at("us").get<std::vector<double>>();
    if (j.contains("checkpoints")) l.checkpoints = j.at("checkpoints").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed ladder: ") + e.what());
  }
  if (l.checkpoints.empty() && !l.lambdas.empty()) l.checkpoints = {l.lambdas.size() - 1};
  l.validate();
  return l;
}

void WeightedParticles::validate() const {
  if (weights.empty()) throw ValidationError("particle set is empty");
  if (dim == 0 || thetas.size() != weights.size() * dim) throw ValidationError("particle array has wrong shape");
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("particle weights must be finite and non-negative");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-10) throw ValidationError("particle weights must sum to 1");
  for (double v : thetas)
    if (!std::isfinite(v)) throw ValidationError("particle parameters must be finite");
}

nlohmann::json to_json(const WeightedParticles& p) {
  nlohmann::json thetas = nlohmann::json::array();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto t = p.theta(i);
    thetas.push_back(std::vector<double>(t.begin(), t.end()));
  }
  return {{"step", p.step}, {"lambda", p.lambda}, {"u", p.u},
          {"thetas", std::move(thetas)}, {"weights", p.weights}, {"seed", p.seed}};
}

WeightedParticles particles_from_json(const nlohmann::json& j) {
  WeightedParticles p;
  try {
    p.step = j.at("step").get<std::size_t>();
    p.lambda = j.at("lambda").get<double>();
    p.u = j.at("u").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.weights = j.at("weights").get<std::vector<double>>();
    const auto rows = j.at("thetas").get<std::vector<std::vector<double>>>();
    if (rows.size() != p.weights.size()) throw ValidationError("thetas and weights differ in length");
    p.dim = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != p.dim) throw ValidationError("particles differ in dimension");
      p.thetas.insert(p.thetas.end(), r.begin(), r.end());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed particles: ") + e.what());
  }
  p.validate();
  return p;
}

double ess(std::span<const double> weights) {
  double ss = 0.0;
  for (double w : weights) ss += w * w;
  return ss > 0.0 ? 1.0 / ss : 0.0;
}

double normalize_log_weights(std::span<const double> log_weights, std::span<double> out) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : log_weights)
    if (!std::isnan(v)) m = std::max(m, v);
  if (!std::isfinite(m)) throw RuntimeFailure("all importance weights vanished (no finite log-weight)");
  double s = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    out[i] = std::isnan(log_weights[i]) ? 0.0 : std::exp(log_weights[i] - m);
    s += out[i];
  }
  for (double& v : out) v /= s;
  return m + std::log(s);
}

std::vector<std::size_t> resample_systematic(std::span<const double> weights, Stream& rng) {
  const std::size_t n = weights.size();
  if (n == 0) return {};
  const double nd = static_cast<double>(n);
  // Cumulative weights in units of 1/N; values within 1e-9 of an integer are
  // snapped so exact multiples of 1/N get exact offspring counts.
  std::vector<double> edges(n);
  double run = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run += nd * weights[i];
    const double r = std::round(run);
    edges[i] = std::abs(run - r) <= 1e-9 ? r : run;
  }
  edges.back() = nd;
  const double offset = uniform01(rng);
  std::vector<std::size_t> ancestors(n);
  std::size_t i = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double pos = offset + static_cast<double>(k);
    while (i + 1 < n && edges[i] <= pos) ++i;
    ancestors[k] = i;
  }
  return ancestors;
}

std::vector<std::size_t> resample_multinomial(std::span<const double> weights, Stream& rng) {
  const std::size_t n = weights.size();
  std::vector<double> cumulative(n);
  double run = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run += weights[i];
    cumulative[i] = run;
  }
  std::vector<std::size_t> ancestors(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = uniform01(rng) * run;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), v);
    ancestors[k] = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
  }
  return ancestors;
}

std::vector<std::size_t> resample(std::span<const double> weights, Stream& rng, ResampleScheme scheme) {
  return scheme == ResampleScheme::systematic ? resample_systematic(weights, rng) : resample_multinomial(weights, rng);
}

WeightedParticles resample_particles(const WeightedParticles& particles, Stream& rng, ResampleScheme scheme) {
  const auto ancestors = resample(particles.weights, rng, scheme);
  WeightedParticles out = particles;
  for (std::size_t k = 0; k < ancestors.size(); ++k) {
    const auto src = particles.theta(ancestors[k]);
    std::copy(src.begin(), src.end(), out.theta(k).begin());
  }
  std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(out.weights.size()));
  return out;
}

namespace {

// A with A A' = covariance; Cholesky when positive definite, otherwise a
// symmetric square root with negative eigenvalues clipped to zero.
Eigen::MatrixXd proposal_factor(const Eigen::MatrixXd& covariance) {
  if (!covariance.allFinite()) throw ValidationError("proposal covariance is not finite");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
  if (eig.info() != Eigen::Success) throw RuntimeFailure("proposal covariance factorization failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace

MoveResult mh_move(WeightedParticles& particles, std::span<double> log_targets, const LogTarget& target,
                   const Eigen::MatrixXd& covariance, std::uint64_t seed, std::size_t step, std::size_t substep,
                   unsigned threads) {
  const std::size_t n = particles.size();
  const std::size_t q = particles.dim;
  if (log_targets.size() != n) throw ValidationError("log-target cache has wrong length");
  if (static_cast<std::size_t>(covariance.rows()) != q || static_cast<std::size_t>(covariance.cols()) != q)
    throw ValidationError("proposal covariance has wrong shape");
  const Eigen::MatrixXd factor = proposal_factor(covariance);

  MoveResult result;
  result.accepted.assign(n, 0);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(q));
    std::vector<double> proposal(q);
    for (std::size_t i = begin; i < end; ++i) {
      Stream rng = make_stream(seed, StreamTag::mh_proposal, i, step, substep);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t j = 0; j < q; ++j) z[static_cast<Eigen::Index>(j)] = normal(rng);
      const Eigen::VectorXd eps = factor * z;
      auto current = particles.theta(i);
      for (std::size_t j = 0; j < q; ++j) proposal[j] = current[j] + eps[static_cast<Eigen::Index>(j)];
      const double proposed = target(i, proposal);
      const double log_ratio = proposed - log_targets[i];
      const double v = uniform01(rng);
      if (log_ratio >= 0.0 || (std::isfinite(proposed) && std::log(v) < log_ratio)) {
        std::copy(proposal.begin(), proposal.end(), current.begin());
        log_targets[i] = proposed;
        result.accepted[i] = 1;
      }
    }
  });
  std::size_t count = 0;
  for (auto a : result.accepted) count += a;
  result.acceptance_rate = n == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(n);
  return result;
}

Eigen::MatrixXd weighted_covariance(const WeightedParticles& particles) {
  const std::size_t q = particles.dim;
  const auto qi = static_cast<Eigen::Index>(q);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(qi);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const auto t = particles.theta(i);
    for (std::size_t j = 0; j < q; ++j) mean[static_cast<Eigen::Index>(j)] += particles.weights[i] * t[j];
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(qi, qi);
  Eigen::VectorXd d(qi);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const auto t = particles.theta(i);
    for (std::size_t j = 0; j < q; ++j) d[static_cast<Eigen::Index>(j)] = t[j] - mean[static_cast<Eigen::Index>(j)];
    cov.noalias() += particles.weights[i] * d * d.transpose();
  }
  return cov;
}

void SMCConfig::validate() const {
  if (n_particles < 2) throw ValidationError("need at least two particles");
  if (!(tau_ess > 0.0 && tau_ess < 1.0)) throw ValidationError("tau_ess must lie in (0, 1)");
  if (mh_steps_per_stage < 1) throw ValidationError("mh_steps_per_stage must be positive");
  if (!std::isfinite(covariance_scale_exponent)) throw ValidationError("covariance exponent must be finite");
  if (!(covariance_jitter >= 0.0)) throw ValidationError("covariance jitter must be non-negative");
}

SMCResult run_smc(const IPWScores& scores, const FeatureMatrix& features, const Prior& prior,
                  const TemperatureLadder& ladder, const SMCConfig& config) {
  config.validate();
  ladder.validate();
  const std::size_t n_obs = scores.size();
  const std::size_t q = prior.dimension();
  if (features.observations() != n_obs) throw ValidationError("scores and features have different lengths");
  if (features.features() != q) throw ValidationError("prior dimension differs from feature dimension");
  if (config.normalized && !(scores.mean_delta_y > 0.0))
    throw ValidationError("normalized posterior needs a positive mean welfare score (got " +
                          std::to_string(scores.mean_delta_y) + ")");
  const double scale = config.normalized ? 1.0 / scores.mean_delta_y : 1.0;
  const std::size_t n = config.n_particles;
  const unsigned threads = resolve_threads(config.threads);

  WeightedParticles p;
  p.dim = q;
  p.thetas.resize(n * q);
  p.weights.assign(n, 1.0 / static_cast<double>(n));
  p.seed = config.seed;
  std::vector<WelfareCost> cache(n), pending(n);

  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Stream rng = make_stream(config.seed, StreamTag::prior_draw, i);
      prior.sample(rng, p.theta(i));
      cache[i] = empirical_welfare_cost(p.theta(i), scores, features);
    }
  });

  SMCResult result;
  auto harvest = [&](std::size_t t) {
    if (std::binary_search(ladder.checkpoints.begin(), ladder.checkpoints.end(), t)) {
      WeightedParticles snap = p;
      snap.step = t;
      snap.lambda = ladder.lambdas[t];
      snap.u = ladder.us[t];
      result.checkpoints.emplace(t, std::move(snap));
    }
  };
  harvest(0);
  result.trace.push_back({0, 0.0, 0.0, static_cast<double>(n), false, 1.0});

  std::vector<double> log_w(n), log_targets(n);
  for (std::size_t t = 1; t < ladder.steps(); ++t) {
    StepDiagnostics diag{t, ladder.lambdas[t], ladder.us[t], 0.0, false, 0.0};
    if (ess(p.weights) < config.tau_ess * static_cast<double>(n)) {
      Stream rng = make_stream(config.seed, StreamTag::resample, t);
      const auto ancestors = resample(p.weights, rng, config.scheme);
      std::vector<double> thetas(n * q);
      std::vector<WelfareCost> moved(n);
      for (std::size_t k = 0; k < n; ++k) {
        const auto src = p.theta(ancestors[k]);
        std::copy(src.begin(), src.end(), thetas.begin() + static_cast<std::ptrdiff_t>(k * q));
        moved[k] = cache[ancestors[k]];
      }
      p.thetas = std::move(thetas);
      cache = std::move(moved);
      std::fill(p.weights.begin(), p.weights.end(), 1.0 / static_cast<double>(n));
      diag.resampled = true;
    }

    const double lam_prev = ladder.lambdas[t - 1] * scale, u_prev = ladder.us[t - 1];
    const double lam = ladder.lambdas[t] * scale, u = ladder.us[t];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& wc = cache[i];
      const double incr = lam_prev * (u_prev * wc.cost - wc.welfare) - lam * (u * wc.cost - wc.welfare);
      log_w[i] = std::log(p.weights[i]) + incr;
    }
    normalize_log_weights(log_w, p.weights);
    diag.ess = ess(p.weights);

    Eigen::MatrixXd cov = weighted_covariance(p);
    cov *= std::pow(static_cast<double>(t), -config.covariance_scale_exponent);
    cov.diagonal().array() += config.covariance_jitter;

    for (std::size_t i = 0; i < n; ++i)
      log_targets[i] = prior.log_density(p.theta(i)) - lam * (u * cache[i].cost - cache[i].welfare);
    const LogTarget target = [&](std::size_t i, std::span<const double> theta) {
      pending[i] = empirical_welfare_cost(theta, scores, features);
      return prior.log_density(theta) - lam * (u * pending[i].cost - pending[i].welfare);
    };
    double acc = 0.0;
    for (std::size_t s = 0; s < config.mh_steps_per_stage; ++s) {
      const MoveResult mv = mh_move(p, log_targets, target, cov, config.seed, t, s, threads);
      for (std::size_t i = 0; i < n; ++i)
        if (mv.accepted[i]) cache[i] = pending[i];
      acc += mv.acceptance_rate;
    }
    diag.acceptance_rate = acc / static_cast<double>(config.mh_steps_per_stage);
    result.trace.push_back(diag);
    harvest(t);
  }
  return result;
}

}  // namespace pbpolicy
