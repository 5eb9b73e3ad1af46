#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace pbpolicy {

// One treatment record Z = (Y, C, D, X).
struct Observation {
  double y = 0.0;
  double c = 0.0;
  int d = 0;
  std::vector<double> x;
};

using PropensityFn = std::function<double(std::span<const double>)>;

// An i.i.d. sample with a known propensity, evaluated once per observation.
struct Sample {
  std::vector<Observation> observations;
  std::vector<double> propensity;  // e(X_i), aligned with observations
  double kappa = 0.5;

  std::size_t size() const { return observations.size(); }
  std::size_t covariate_dim() const { return observations.empty() ? 0 : observations.front().x.size(); }

  // Throws ValidationError unless the sample is non-empty, D is binary,
  // covariate dimensions agree and every e(X_i) lies in [kappa, 1 - kappa].
  void validate() const;
};

Sample make_sample(std::vector<Observation> observations, const PropensityFn& propensity, double kappa);
Sample make_sample(std::vector<Observation> observations, double constant_propensity, double kappa);

// Enforces |Y| <= M_y / 2 and |C| <= M_c / 2 for whichever bounds are declared.
void check_declared_bounds(const Sample& sample, std::optional<double> m_y, std::optional<double> m_c);

Sample subsample(const Sample& sample, std::span<const std::size_t> rows);

struct IPWScores {
  std::vector<double> delta_y;
  std::vector<double> delta_c;
  double mean_delta_y = 0.0;

  std::size_t size() const { return delta_y.size(); }
};

// delta_i = V_i D_i / e(X_i) - V_i (1 - D_i) / (1 - e(X_i)) for V in {Y, C}.
IPWScores ipw_transform(const Sample& sample);

// Feature-major (column) storage of phi(X_i): column j holds feature j for all
// observations contiguously, which is the layout the SIMD kernels stream over.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t q, std::size_t n) : q_(q), n_(n), data_(q * n, 0.0) {}

  std::size_t features() const { return q_; }
  std::size_t observations() const { return n_; }

  std::span<double> column(std::size_t j) { return {data_.data() + j * n_, n_}; }
  std::span<const double> column(std::size_t j) const { return {data_.data() + j * n_, n_}; }
  double& at(std::size_t i, std::size_t j) { return data_[j * n_ + i]; }
  double at(std::size_t i, std::size_t j) const { return data_[j * n_ + i]; }
  const double* data() const { return data_.data(); }

  std::vector<double> row(std::size_t i) const;
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t q_ = 0;
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// Monomial feature map phi(x) = (prod_l x_l^{p_jl})_j with optional
// standardization of every non-constant monomial.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t input_dim, std::vector<std::vector<int>> exponents);

  // All monomials of total degree <= degree, constant first, then graded
  // lexicographic order. q = C(d_x + degree, degree).
  static FeatureMap polynomial(int degree, std::size_t input_dim);
  // phi(x) = x, no constant.
  static FeatureMap identity(std::size_t input_dim);

  std::size_t dimension() const { return exponents_.size(); }
  std::size_t input_dimension() const { return input_dim_; }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  // Fits per-monomial (mean, sd) on training covariates. The constant
  // monomial is left at 1. Throws ValidationError if any sd < 1e-12.
  void fit_normalization(std::span<const std::vector<double>> xs);
  void set_normalization(std::vector<double> means, std::vector<double> sds);
  bool normalized() const { return !means_.empty(); }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& sds() const { return sds_; }

  std::vector<double> transform(std::span<const double> x) const;
  void transform_into(std::span<const double> x, std::span<double> out) const;
  FeatureMatrix transform_all(std::span<const std::vector<double>> xs) const;
  FeatureMatrix transform_all(const Sample& sample) const;

  nlohmann::json to_json() const;
  static FeatureMap from_json(const nlohmann::json& j);

 private:
  bool is_constant(std::size_t j) const;
  double raw_monomial(std::size_t j, std::span<const double> x) const;

  std::size_t input_dim_ = 0;
  std::vector<std::vector<int>> exponents_;
  std::vector<double> means_;
  std::vector<double> sds_;
};

// f_theta(x) = 1{phi(x)' theta > 0}; ties at zero resolve to 0.
struct LinearPolicy {
  std::vector<double> theta;

  int decide(std::span<const double> phi) const;
};

// (1/n) sum_i delta_{y,i} f_theta(X_i) and the cost analogue.
double empirical_welfare(const LinearPolicy& policy, const IPWScores& scores, const FeatureMatrix& features);
double empirical_cost(const LinearPolicy& policy, const IPWScores& scores, const FeatureMatrix& features);

struct WelfareCost {
  double welfare = 0.0;
  double cost = 0.0;
};

// Both functionals in a single pass over the data.
WelfareCost empirical_welfare_cost(std::span<const double> theta, const IPWScores& scores,
                                   const FeatureMatrix& features);

// Welfare and cost of an arbitrary [0,1]-valued rule given its values at X_i.
WelfareCost empirical_welfare_cost(std::span<const double> treat, const IPWScores& scores);

// CSV ingestion: header with y, c, d, x1..x_k and optionally e. When the
// e column is absent a constant propensity must be supplied.
Sample read_sample_csv(const std::string& path, std::optional<double> constant_propensity, double kappa);
void write_sample_csv(const std::string& path, const Sample& sample);
// Reads x1..x_k columns, ignoring everything else.
std::vector<std::vector<double>> read_covariates_csv(const std::string& path);

}  // namespace pbpolicy
