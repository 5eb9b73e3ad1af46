#pragma once

#include <map>
#include <optional>
#include <string>

#include "json.hpp"

namespace pbpolicy {

struct BoundInputs {
  double n = 0.0;
  double kappa = 0.5;
  std::optional<double> m_y;
  std::optional<double> m_c;
  double lambda = 1.0;
  double u = 0.0;
  double epsilon = 0.05;
  double q = 1.0;
  std::optional<double> grid_cardinality;  // |W| for the union-bound correction
  std::optional<double> nu;                // margin constant for the normal-prior terms

  void validate() const;
  double my() const;  // throws ValidationError when undeclared
  double mc() const;
  // log|W| when a grid is declared, else 0.
  double log_grid() const;
};

// Bernoulli KL with 0 log 0 = 0 and a log(a/0) = +inf for a > 0.
double small_kl(double a, double b);
double pinsker_gap(double a, double b);
// Largest b in [a, 1] with kl(a, b) <= c.
double kl_inverse_upper(double a, double c);
// Upper confidence limit on a true risk in [0, 1] from its empirical value:
// kl(emp, true) <= (D_KL + log(2 sqrt n) + log(1/eps)) / n.
double seeger_upper(double empirical, double d_kl, double n, double epsilon);

// Isotropic normal KL(N(mu_rho, s_rho^2 I) || N(mu_pi, s_pi^2 I)) given the
// squared mean distance.
double normal_kl(double mean_sq_distance, double sigma_rho, double sigma_pi, double q);

enum class LossKind { welfare, cost };  // picks M_l = M_y or M_c

double thm41a_slack(const BoundInputs& in, double d_kl, LossKind kind = LossKind::welfare);
double thm41b_bound(const BoundInputs& in, LossKind kind = LossKind::welfare);
double thm41c_bound(const BoundInputs& in, LossKind kind = LossKind::welfare);
double thm42a_slack(const BoundInputs& in, double u_hat);

struct Thm42bTerms {
  double u1 = 0.0;
  double u2 = 0.0;
  double remainder = 0.0;  // u U1 + U2
};
Thm42bTerms thm42b_terms(const BoundInputs& in);

struct Thm43Terms {
  double ubar1 = 0.0;
  double ubar2 = 0.0;
  double ubar3 = 0.0;
  double ubar4 = 0.0;
  double lambda_a = 0.0;  // kappa sqrt(nq) / M_y
  double lambda_b = 0.0;  // kappa sqrt(nq) / (M_y + u M_c)
};
// Requires nu. Uses in.u for the parts that depend on the penalty.
Thm43Terms thm43_bounds(const BoundInputs& in);
// Remainders added to the regret of the best feasible parameter.
double thm43a_remainder(const BoundInputs& in, double u_hat, double u_star);
double thm43b_remainder(const BoundInputs& in);

struct BoundReport {
  std::map<std::string, double> values;
  nlohmann::json inputs;
};

// Every bound computable from the declared inputs. Entries that need
// undeclared constants are omitted.
BoundReport bound_report(const BoundInputs& in, double d_kl = 0.0, std::optional<double> u_hat = std::nullopt,
                         std::optional<double> u_star = std::nullopt);

nlohmann::json to_json(const BoundReport& r);
BoundReport bound_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BoundInputs& in);

}  // namespace pbpolicy
