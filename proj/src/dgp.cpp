#include "pbpolicy/dgp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>

#include "pbpolicy/error.hpp"
#include "pbpolicy/parallel.hpp"

namespace pbpolicy {

DgpId parse_dgp(const std::string& name) {
  if (name == "dgp1" || name == "DGP1") return DgpId::dgp1;
  if (name == "dgp2" || name == "DGP2") return DgpId::dgp2;
  throw ValidationError("unknown DGP '" + name + "' (expected dgp1 or dgp2)");
}

std::string dgp_name(DgpId id) { return id == DgpId::dgp1 ? "dgp1" : "dgp2"; }

std::size_t dgp_covariate_dim(DgpId) { return 3; }
double dgp_m_y(DgpId id) { return id == DgpId::dgp1 ? 18.0 : 16.0; }
double dgp_m_c(DgpId) { return 10.0; }

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double baseline(DgpId id, std::span<const double> x) {
  if (id == DgpId::dgp1) return 3.0 - 2.0 * x[0] + x[1] - x[2];
  return 1.0 + std::max(x[0] + x[1], 0.0) + x[2];
}

double cost_probability(DgpId id, std::span<const double> x) {
  const double p = id == DgpId::dgp1 ? (1.0 - x[2] * x[2] + 2.0 * x[1]) / 5.0 : 2.0 * logistic(2.0 * x[1] + x[2]) / 5.0;
  assert(p >= 0.0 && p <= 1.0);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

double dgp_cate(DgpId id, std::span<const double> x) {
  if (x.size() != 3) throw ValidationError("DGP covariates have dimension 3");
  if (id == DgpId::dgp1) return 1.0 - x[0] * x[0] + x[1] + x[2];
  return 2.0 * logistic(2.0 * (x[0] + x[1]) / 3.0);
}

double dgp_expected_cost(DgpId id, std::span<const double> x) {
  if (x.size() != 3) throw ValidationError("DGP covariates have dimension 3");
  return 5.0 * cost_probability(id, x);
}

double truncated_normal(Stream& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  while (true) {
    const double v = z(rng);
    if (v >= -2.0 && v <= 2.0) return v;
  }
}

std::vector<std::vector<double>> SimulatedPopulation::covariates() const {
  std::vector<std::vector<double>> xs;
  xs.reserve(size());
  for (const auto& o : sample.observations) xs.push_back(o.x);
  return xs;
}

OraclePopulation SimulatedPopulation::oracle() const {
  OraclePopulation p;
  p.delta_y = cate;
  p.delta_c = expected_cost;
  return p;
}

SimulatedPopulation generate(const DGPSpec& spec, unsigned threads) {
  if (spec.n < 1) throw ValidationError("population size must be >= 1");
  const std::size_t n = spec.n;
  SimulatedPopulation pop;
  pop.spec = spec;
  pop.y0.resize(n);
  pop.y1.resize(n);
  pop.c0.assign(n, 0.0);
  pop.c1.resize(n);
  pop.cate.resize(n);
  pop.expected_cost.resize(n);
  std::vector<Observation> obs(n);

  parallel_for(n, resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Stream rng = make_stream(spec.seed, StreamTag::dgp_unit, i);
      std::vector<double> x(3);
      const double lo = spec.id == DgpId::dgp1 ? 0.0 : -1.0;
      for (double& v : x) v = lo + (1.0 - lo) * uniform01(rng);
      const double eps = truncated_normal(rng);
      const double base = baseline(spec.id, x);
      const double effect = dgp_cate(spec.id, x);
      pop.y0[i] = base + eps;
      pop.y1[i] = base + effect + eps;
      std::binomial_distribution<int> binom(5, cost_probability(spec.id, x));
      pop.c1[i] = static_cast<double>(binom(rng));
      const int d = uniform01(rng) < kDgpPropensity ? 1 : 0;
      pop.cate[i] = effect;
      pop.expected_cost[i] = dgp_expected_cost(spec.id, x);
      Observation& o = obs[i];
      o.d = d;
      o.y = d ? pop.y1[i] : pop.y0[i];
      o.c = d ? pop.c1[i] : pop.c0[i];
      o.x = std::move(x);
    }
  });
  pop.sample = make_sample(std::move(obs), kDgpPropensity, kDgpKappa);
  return pop;
}

GainCost true_gain_cost(std::span<const double> f, const SimulatedPopulation& pop) {
  if (f.size() != pop.size()) throw ValidationError("rule values not aligned with population");
  double g = 0.0, c = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    g += pop.cate[i] * f[i];
    c += pop.expected_cost[i] * f[i];
  }
  const double n = static_cast<double>(f.size());
  return {g / n, c / n};
}

nlohmann::json hidden_truth_json(const SimulatedPopulation& pop) {
  return {{"y0", pop.y0},     {"y1", pop.y1},     {"c0", pop.c0},
          {"c1", pop.c1},     {"cate", pop.cate}, {"expected_cost", pop.expected_cost}};
}

nlohmann::json to_json(const SimulatedPopulation& pop) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : pop.sample.observations) obs.push_back({{"y", o.y}, {"c", o.c}, {"d", o.d}, {"x", o.x}});
  return {{"dgp", dgp_name(pop.spec.id)},
          {"seed", pop.spec.seed},
          {"n", pop.spec.n},
          {"kappa", pop.sample.kappa},
          {"propensity", pop.sample.propensity},
          {"observations", std::move(obs)},
          {"truth", hidden_truth_json(pop)}};
}

SimulatedPopulation population_from_json(const nlohmann::json& j) {
  SimulatedPopulation pop;
  try {
    pop.spec.id = parse_dgp(j.at("dgp").get<std::string>());
    pop.spec.seed = j.at("seed").get<std::uint64_t>();
    pop.spec.n = j.at("n").get<std::size_t>();
    std::vector<Observation> obs;
    for (const auto& o : j.at("observations"))
      obs.push_back({o.at("y").get<double>(), o.at("c").get<double>(), o.at("d").get<int>(),
                     o.at("x").get<std::vector<double>>()});
    pop.sample.observations = std::move(obs);
    pop.sample.propensity = j.at("propensity").get<std::vector<double>>();
    pop.sample.kappa = j.at("kappa").get<double>();
    const auto& t = j.at("truth");
    pop.y0 = t.at("y0").get<std::vector<double>>();
    pop.y1 = t.at("y1").get<std::vector<double>>();
    pop.c0 = t.at("c0").get<std::vector<double>>();
    pop.c1 = t.at("c1").get<std::vector<double>>();
    pop.cate = t.at("cate").get<std::vector<double>>();
    pop.expected_cost = t.at("expected_cost").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed population: ") + e.what());
  }
  pop.sample.validate();
  const std::size_t n = pop.sample.size();
  if (pop.spec.n != n || pop.y0.size() != n || pop.y1.size() != n || pop.c0.size() != n || pop.c1.size() != n ||
      pop.cate.size() != n || pop.expected_cost.size() != n)
    throw ValidationError("population arrays have inconsistent lengths");
  return pop;
}

}  // namespace pbpolicy
