#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pbpolicy/core_data.hpp"
#include "pbpolicy/oracle.hpp"
#include "pbpolicy/rng.hpp"

namespace pbpolicy {

enum class DgpId { dgp1, dgp2 };

DgpId parse_dgp(const std::string& name);
std::string dgp_name(DgpId id);

struct DGPSpec {
  DgpId id = DgpId::dgp1;
  std::uint64_t seed = 1;
  std::size_t n = 1000;
};

constexpr double kDgpPropensity = 0.5;
constexpr double kDgpKappa = 0.5;

std::size_t dgp_covariate_dim(DgpId id);
// Declared |Y| <= M_y / 2 and |C| <= M_c / 2.
double dgp_m_y(DgpId id);
double dgp_m_c(DgpId id);

// E[Y1 - Y0 | x] and E[C1 | x] (C0 = 0).
double dgp_cate(DgpId id, std::span<const double> x);
double dgp_expected_cost(DgpId id, std::span<const double> x);

struct SimulatedPopulation {
  DGPSpec spec;
  Sample sample;
  std::vector<double> y0, y1, c0, c1;
  std::vector<double> cate;           // E[delta_y | X_i]
  std::vector<double> expected_cost;  // E[C1 | X_i]

  std::size_t size() const { return sample.size(); }
  std::vector<std::vector<double>> covariates() const;
  OraclePopulation oracle() const;
};

// Unit i draws from its own stream (seed, i), so the result does not depend
// on the thread count.
SimulatedPopulation generate(const DGPSpec& spec, unsigned threads = 1);

// Truncated N(0, 1) on [-2, 2] by rejection.
double truncated_normal(Stream& rng);

struct GainCost {
  double gain = 0.0;
  double cost = 0.0;
};

// Averages of E[delta_y|X] f(X) and E[C1|X] f(X) over the population.
GainCost true_gain_cost(std::span<const double> f, const SimulatedPopulation& pop);

nlohmann::json hidden_truth_json(const SimulatedPopulation& pop);
nlohmann::json to_json(const SimulatedPopulation& pop);
SimulatedPopulation population_from_json(const nlohmann::json& j);

}  // namespace pbpolicy
