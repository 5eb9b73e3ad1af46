#include "pbpolicy/bounds.hpp"

#include <cmath>
#include <limits>

#include "pbpolicy/error.hpp"

namespace pbpolicy {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double v) { return v * v; }
}  // namespace

void BoundInputs::validate() const {
  if (!(n >= 1.0) || !std::isfinite(n)) throw ValidationError("n must be >= 1");
  if (!(kappa > 0.0 && kappa <= 0.5)) throw ValidationError("kappa must lie in (0, 1/2]");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive");
  if (!(u >= 0.0) || !std::isfinite(u)) throw ValidationError("u must be non-negative");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in (0, 1]");
  if (!(q >= 1.0)) throw ValidationError("q must be >= 1");
  if (m_y && !(*m_y > 0.0)) throw ValidationError("M_y must be positive");
  if (m_c && !(*m_c > 0.0)) throw ValidationError("M_c must be positive");
  if (grid_cardinality && !(*grid_cardinality >= 1.0)) throw ValidationError("grid cardinality must be >= 1");
  if (nu && !(*nu > 0.0)) throw ValidationError("nu must be positive");
}

double BoundInputs::my() const {
  if (!m_y) throw ValidationError("M_y is required for this bound");
  return *m_y;
}

double BoundInputs::mc() const {
  if (!m_c) throw ValidationError("M_c is required for this bound");
  return *m_c;
}

double BoundInputs::log_grid() const { return grid_cardinality ? std::log(*grid_cardinality) : 0.0; }

double small_kl(double a, double b) {
  if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) throw ValidationError("kl arguments must lie in [0, 1]");
  auto term = [](double p, double r) {
    if (p == 0.0) return 0.0;
    if (r == 0.0) return kInf;
    return p * std::log(p / r);
  };
  const double v = term(a, b) + term(1.0 - a, 1.0 - b);
  return v < 0.0 ? 0.0 : v;
}

double pinsker_gap(double a, double b) {
  const double kl = small_kl(a, b);
  if (std::isinf(kl)) return kl;
  return kl - 2.0 * sq(a - b);
}

double kl_inverse_upper(double a, double c) {
  if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("kl inverse needs a in [0, 1]");
  if (!(c >= 0.0)) throw ValidationError("kl inverse needs c >= 0");
  if (small_kl(a, 1.0) <= c) return 1.0;
  // kl(a, .) is increasing on [a, 1]; bisect until the bracket stops shrinking.
  double lo = a, hi = 1.0;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (small_kl(a, mid) <= c)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double seeger_upper(double empirical, double d_kl, double n, double epsilon) {
  if (!(n >= 1.0)) throw ValidationError("n must be >= 1");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in (0, 1]");
  if (!(d_kl >= 0.0)) throw ValidationError("KL divergence must be non-negative");
  const double c = (d_kl + std::log(2.0 * std::sqrt(n)) + std::log(1.0 / epsilon)) / n;
  return kl_inverse_upper(empirical, c);
}

double normal_kl(double mean_sq_distance, double sigma_rho, double sigma_pi, double q) {
  if (!(sigma_rho > 0.0) || !(sigma_pi > 0.0)) throw ValidationError("normal KL needs positive sigmas");
  if (!(mean_sq_distance >= 0.0)) throw ValidationError("squared mean distance must be non-negative");
  const double ratio = sq(sigma_rho) / sq(sigma_pi);
  return 0.5 * mean_sq_distance / sq(sigma_pi) + 0.5 * q * (ratio - 1.0) - 0.5 * q * std::log(ratio);
}

namespace {
double m_loss(const BoundInputs& in, LossKind kind) { return kind == LossKind::welfare ? in.my() : in.mc(); }
double m_pen(const BoundInputs& in, double u) { return in.my() + u * in.mc(); }
double log2sqrtn(const BoundInputs& in) { return std::log(2.0 * std::sqrt(in.n)); }
}  // namespace

double thm41a_slack(const BoundInputs& in, double d_kl, LossKind kind) {
  in.validate();
  if (!(d_kl >= 0.0)) throw ValidationError("KL divergence must be non-negative");
  const double ml = m_loss(in, kind);
  const double l = in.lambda;
  return d_kl / l + (sq(l) * sq(ml) / (8.0 * in.n * sq(in.kappa)) + std::log(1.0 / in.epsilon) + in.log_grid()) / l;
}

double thm41b_bound(const BoundInputs& in, LossKind kind) {
  in.validate();
  const double ml = m_loss(in, kind);
  const double mp = m_pen(in, in.u);
  const double k = in.kappa, n = in.n, l = in.lambda;
  const double logs = log2sqrtn(in) + std::log(2.0 / in.epsilon) + in.log_grid();
  const double bracket = l * std::sqrt(2.0) * mp / (k * std::sqrt(n)) * std::sqrt(logs) +
                         sq(l) * sq(mp) / (2.0 * n * sq(k)) + logs;
  return sq(ml) / (2.0 * n * sq(k)) * bracket;
}

double thm41c_bound(const BoundInputs& in, LossKind kind) {
  in.validate();
  const double ml = m_loss(in, kind);
  const double mp = m_pen(in, in.u);
  const double k = in.kappa, n = in.n, l = in.lambda;
  const double log2eps = std::log(2.0 / in.epsilon) + in.log_grid();
  return std::sqrt(2.0) * mp / (k * std::sqrt(n)) * std::sqrt(log2sqrtn(in) + log2eps) +
         l * sq(mp) / (2.0 * n * sq(k)) + (sq(l) * sq(ml) / (8.0 * n * sq(k)) + log2eps) / l;
}

double thm42a_slack(const BoundInputs& in, double u_hat) {
  in.validate();
  if (!(u_hat >= 0.0)) throw ValidationError("u_hat must be non-negative");
  const double k = in.kappa, n = in.n, l = in.lambda;
  const double log3 = std::log(3.0 / in.epsilon);
  double v = 2.0 / l * (sq(l) * sq(in.my()) / (8.0 * n * sq(k)) + log3);
  if (u_hat > 0.0) v += u_hat * std::sqrt(sq(in.mc()) * log3 / (2.0 * n * sq(k)));
  return v;
}

Thm42bTerms thm42b_terms(const BoundInputs& in) {
  in.validate();
  const double k = in.kappa, n = in.n, l = in.lambda, u = in.u;
  const double mp = m_pen(in, u);
  const double log4 = std::log(4.0 / in.epsilon);
  Thm42bTerms t;
  t.u1 = std::sqrt(2.0) * mp / (k * std::sqrt(n)) * std::sqrt(log2sqrtn(in) + log4) + l * sq(mp) / (2.0 * n * sq(k));
  t.u2 = std::sqrt(sq(mp) * log4 / (2.0 * n * sq(k))) +
         (sq(l) * (sq(in.my()) + u * sq(in.mc())) / (8.0 * n * sq(k)) + (1.0 + u) * log4) / l;
  t.remainder = u * t.u1 + t.u2;
  return t;
}

Thm43Terms thm43_bounds(const BoundInputs& in) {
  in.validate();
  if (!in.nu) throw ValidationError("the margin constant nu is required for the normal-prior bounds");
  const double nu = *in.nu, k = in.kappa, n = in.n, q = in.q, u = in.u;
  const double my = in.my(), mc = in.mc();
  const double log4 = std::log(4.0 / in.epsilon);
  const double rn = std::sqrt(n), rq = std::sqrt(q);
  Thm43Terms t;
  t.ubar1 = std::sqrt(q / n) * (nu * my / rq + (my / k) * (0.25 + 1.0 / (4.0 * n)));
  t.ubar2 = (rq * log2sqrtn(in) + std::sqrt(2.0) * u * std::sqrt(log2sqrtn(in) + log4)) / rn;
  t.ubar3 = (std::sqrt(log4 / 2.0) + (1.0 + u) * log4 / rq) / rn;
  t.ubar4 = (k * nu + rq * (1.0 / (8.0 * n) + u / 2.0)) / rn +
            std::sqrt(q / n) * (sq(my) + u * sq(mc)) / (8.0 * sq(my + u * mc));
  t.lambda_a = k * std::sqrt(n * q) / my;
  t.lambda_b = k * std::sqrt(n * q) / (my + u * mc);
  return t;
}

double thm43a_remainder(const BoundInputs& in, double u_hat, double u_star) {
  const Thm43Terms t = thm43_bounds(in);
  if (!(u_hat >= 0.0) || !(u_star >= 0.0)) throw ValidationError("u_hat and u_star must be non-negative");
  const double k = in.kappa, n = in.n, q = in.q, my = in.my(), mc = in.mc();
  const double log3 = std::log(3.0 / in.epsilon);
  return std::sqrt(q / n) * std::log(4.0 * n) * my / k + 2.0 * my * log3 / (k * std::sqrt(n * q)) +
         u_hat * std::sqrt(sq(mc) * log3 / (2.0 * n * sq(k))) + u_star * (*in.nu) * mc / std::sqrt(n) + t.ubar1;
}

double thm43b_remainder(const BoundInputs& in) {
  const Thm43Terms t = thm43_bounds(in);
  return (in.my() + in.u * in.mc()) / in.kappa * (t.ubar2 + t.ubar3 + t.ubar4);
}

nlohmann::json to_json(const BoundInputs& in) {
  nlohmann::json j{{"n", in.n},         {"kappa", in.kappa}, {"lambda", in.lambda},
                   {"u", in.u},         {"epsilon", in.epsilon}, {"q", in.q}};
  j["M_y"] = in.m_y ? nlohmann::json(*in.m_y) : nlohmann::json(nullptr);
  j["M_c"] = in.m_c ? nlohmann::json(*in.m_c) : nlohmann::json(nullptr);
  j["grid_cardinality"] = in.grid_cardinality ? nlohmann::json(*in.grid_cardinality) : nlohmann::json(nullptr);
  j["nu"] = in.nu ? nlohmann::json(*in.nu) : nlohmann::json(nullptr);
  return j;
}

BoundReport bound_report(const BoundInputs& in, double d_kl, std::optional<double> u_hat,
                         std::optional<double> u_star) {
  in.validate();
  BoundReport r;
  r.inputs = to_json(in);
  r.inputs["D_KL"] = d_kl;
  r.inputs["u_hat"] = u_hat ? nlohmann::json(*u_hat) : nlohmann::json(nullptr);
  r.inputs["u_star"] = u_star ? nlohmann::json(*u_star) : nlohmann::json(nullptr);
  auto& v = r.values;
  if (in.m_y) {
    v["thm41a_slack"] = thm41a_slack(in, d_kl, LossKind::welfare);
  }
  if (in.m_c) v["thm41a_slack_cost"] = thm41a_slack(in, d_kl, LossKind::cost);
  if (in.m_y && in.m_c) {
    v["thm41b_bound"] = thm41b_bound(in, LossKind::welfare);
    v["thm41b_bound_cost"] = thm41b_bound(in, LossKind::cost);
    v["thm41c_bound"] = thm41c_bound(in, LossKind::welfare);
    v["thm41c_bound_cost"] = thm41c_bound(in, LossKind::cost);
    v["thm42a_slack"] = thm42a_slack(in, u_hat.value_or(0.0));
    const auto b = thm42b_terms(in);
    v["thm42b_U1"] = b.u1;
    v["thm42b_U2"] = b.u2;
    v["thm42b_remainder"] = b.remainder;
    if (in.nu) {
      const auto t = thm43_bounds(in);
      v["thm43_Ubar1"] = t.ubar1;
      v["thm43_Ubar2"] = t.ubar2;
      v["thm43_Ubar3"] = t.ubar3;
      v["thm43_Ubar4"] = t.ubar4;
      v["thm43a_lambda"] = t.lambda_a;
      v["thm43b_lambda"] = t.lambda_b;
      v["thm43b_remainder"] = thm43b_remainder(in);
      if (u_hat && u_star) v["thm43a_remainder"] = thm43a_remainder(in, *u_hat, *u_star);
    }
  }
  return r;
}

nlohmann::json to_json(const BoundReport& r) { return {{"inputs", r.inputs}, {"values", r.values}}; }

BoundReport bound_report_from_json(const nlohmann::json& j) {
  BoundReport r;
  try {
    r.inputs = j.at("inputs");
    r.values = j.at("values").get<std::map<std::string, double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed bound report: ") + e.what());
  }
  return r;
}

}  // namespace pbpolicy
