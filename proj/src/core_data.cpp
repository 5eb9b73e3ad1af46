#include "pbpolicy/core_data.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pbpolicy/error.hpp"
#include "pbpolicy/kernels.hpp"

namespace pbpolicy {

void Sample::validate() const {
  if (observations.empty()) throw ValidationError("sample is empty");
  if (propensity.size() != observations.size()) throw ValidationError("propensity vector not aligned with sample");
  if (!(kappa > 0.0 && kappa <= 0.5)) throw ValidationError("kappa must lie in (0, 1/2]");
  const std::size_t dx = observations.front().x.size();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const Observation& o = observations[i];
    if (o.d != 0 && o.d != 1) throw ValidationError("treatment indicator must be 0 or 1 (row " + std::to_string(i) + ")");
    if (o.x.size() != dx) throw ValidationError("covariate dimension mismatch at row " + std::to_string(i));
    if (!std::isfinite(o.y) || !std::isfinite(o.c)) throw ValidationError("non-finite outcome or cost at row " + std::to_string(i));
    const double e = propensity[i];
    if (!(e >= kappa && e <= 1.0 - kappa))
      throw ValidationError("propensity " + std::to_string(e) + " outside [kappa, 1 - kappa] at row " + std::to_string(i));
  }
}

Sample make_sample(std::vector<Observation> observations, const PropensityFn& propensity, double kappa) {
  Sample s;
  s.kappa = kappa;
  s.propensity.reserve(observations.size());
  for (const auto& o : observations) s.propensity.push_back(propensity(o.x));
  s.observations = std::move(observations);
  s.validate();
  return s;
}

Sample make_sample(std::vector<Observation> observations, double constant_propensity, double kappa) {
  Sample s;
  s.kappa = kappa;
  s.propensity.assign(observations.size(), constant_propensity);
  s.observations = std::move(observations);
  s.validate();
  return s;
}

void check_declared_bounds(const Sample& sample, std::optional<double> m_y, std::optional<double> m_c) {
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Observation& o = sample.observations[i];
    if (m_y && std::abs(o.y) > *m_y / 2.0)
      throw ValidationError("|y| exceeds M_y/2 at row " + std::to_string(i));
    if (m_c && std::abs(o.c) > *m_c / 2.0)
      throw ValidationError("|c| exceeds M_c/2 at row " + std::to_string(i));
  }
}

Sample subsample(const Sample& sample, std::span<const std::size_t> rows) {
  Sample out;
  out.kappa = sample.kappa;
  out.observations.reserve(rows.size());
  out.propensity.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= sample.size()) throw ValidationError("subsample row out of range");
    out.observations.push_back(sample.observations[r]);
    out.propensity.push_back(sample.propensity[r]);
  }
  return out;
}

IPWScores ipw_transform(const Sample& sample) {
  sample.validate();
  const std::size_t n = sample.size();
  IPWScores s;
  s.delta_y.resize(n);
  s.delta_c.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& o = sample.observations[i];
    const double e = sample.propensity[i];
    const double d = static_cast<double>(o.d);
    s.delta_y[i] = o.y * d / e - o.y * (1.0 - d) / (1.0 - e);
    s.delta_c[i] = o.c * d / e - o.c * (1.0 - d) / (1.0 - e);
    total += s.delta_y[i];
  }
  s.mean_delta_y = total / static_cast<double>(n);
  return s;
}

std::vector<double> FeatureMatrix::row(std::size_t i) const {
  std::vector<double> r(q_);
  for (std::size_t j = 0; j < q_; ++j) r[j] = at(i, j);
  return r;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out(q_, rows.size());
  for (std::size_t j = 0; j < q_; ++j)
    for (std::size_t k = 0; k < rows.size(); ++k) out.at(k, j) = at(rows[k], j);
  return out;
}

FeatureMap::FeatureMap(std::size_t input_dim, std::vector<std::vector<int>> exponents)
    : input_dim_(input_dim), exponents_(std::move(exponents)) {
  if (exponents_.empty()) throw ValidationError("feature map needs at least one monomial");
  for (const auto& e : exponents_) {
    if (e.size() != input_dim_) throw ValidationError("monomial exponent length differs from input dimension");
    for (int p : e)
      if (p < 0) throw ValidationError("negative monomial exponent");
  }
}

namespace {

void enumerate_degree(std::size_t dim, int remaining, std::size_t pos, std::vector<int>& cur,
                      std::vector<std::vector<int>>& out) {
  if (pos + 1 == dim) {
    cur[pos] = remaining;
    out.push_back(cur);
    return;
  }
  for (int p = remaining; p >= 0; --p) {
    cur[pos] = p;
    enumerate_degree(dim, remaining - p, pos + 1, cur, out);
  }
  cur[pos] = 0;
}

}  // namespace

FeatureMap FeatureMap::polynomial(int degree, std::size_t input_dim) {
  if (degree < 1) throw ValidationError("polynomial degree must be >= 1");
  if (input_dim < 1) throw ValidationError("covariate dimension must be >= 1");
  std::vector<std::vector<int>> exps;
  std::vector<int> cur(input_dim, 0);
  for (int total = 0; total <= degree; ++total) enumerate_degree(input_dim, total, 0, cur, exps);
  return FeatureMap(input_dim, std::move(exps));
}

FeatureMap FeatureMap::identity(std::size_t input_dim) {
  if (input_dim < 1) throw ValidationError("covariate dimension must be >= 1");
  std::vector<std::vector<int>> exps(input_dim, std::vector<int>(input_dim, 0));
  for (std::size_t l = 0; l < input_dim; ++l) exps[l][l] = 1;
  return FeatureMap(input_dim, std::move(exps));
}

bool FeatureMap::is_constant(std::size_t j) const {
  for (int p : exponents_[j])
    if (p != 0) return false;
  return true;
}

double FeatureMap::raw_monomial(std::size_t j, std::span<const double> x) const {
  double v = 1.0;
  const auto& e = exponents_[j];
  for (std::size_t l = 0; l < input_dim_; ++l)
    for (int k = 0; k < e[l]; ++k) v *= x[l];
  return v;
}

void FeatureMap::fit_normalization(std::span<const std::vector<double>> xs) {
  if (xs.size() < 2) throw ValidationError("normalization needs at least two observations");
  const std::size_t q = dimension();
  std::vector<double> means(q, 0.0), sds(q, 1.0);
  for (std::size_t j = 0; j < q; ++j) {
    if (is_constant(j)) {
      means[j] = 0.0;
      sds[j] = 1.0;
      continue;
    }
    double sum = 0.0;
    for (const auto& x : xs) {
      if (x.size() != input_dim_) throw ValidationError("covariate dimension mismatch");
      sum += raw_monomial(j, x);
    }
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (const auto& x : xs) {
      const double dv = raw_monomial(j, x) - mean;
      ss += dv * dv;
    }
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    if (!(sd >= 1e-12)) throw ValidationError("monomial " + std::to_string(j) + " has (near) zero variance");
    means[j] = mean;
    sds[j] = sd;
  }
  means_ = std::move(means);
  sds_ = std::move(sds);
}

void FeatureMap::set_normalization(std::vector<double> means, std::vector<double> sds) {
  if (means.empty() && sds.empty()) {
    means_.clear();
    sds_.clear();
    return;
  }
  if (means.size() != dimension() || sds.size() != dimension())
    throw ValidationError("normalization length differs from feature dimension");
  for (double s : sds)
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("normalization sd must be positive");
  means_ = std::move(means);
  sds_ = std::move(sds);
}

void FeatureMap::transform_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != input_dim_) throw ValidationError("covariate dimension mismatch");
  if (out.size() != dimension()) throw ValidationError("feature buffer has wrong length");
  for (std::size_t j = 0; j < dimension(); ++j) {
    const double v = raw_monomial(j, x);
    out[j] = (normalized() && !is_constant(j)) ? (v - means_[j]) / sds_[j] : v;
  }
}

std::vector<double> FeatureMap::transform(std::span<const double> x) const {
  std::vector<double> out(dimension());
  transform_into(x, out);
  return out;
}

FeatureMatrix FeatureMap::transform_all(std::span<const std::vector<double>> xs) const {
  FeatureMatrix m(dimension(), xs.size());
  std::vector<double> buf(dimension());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    transform_into(xs[i], buf);
    for (std::size_t j = 0; j < buf.size(); ++j) m.at(i, j) = buf[j];
  }
  return m;
}

FeatureMatrix FeatureMap::transform_all(const Sample& sample) const {
  std::vector<std::vector<double>> xs;
  xs.reserve(sample.size());
  for (const auto& o : sample.observations) xs.push_back(o.x);
  return transform_all(xs);
}

nlohmann::json FeatureMap::to_json() const {
  nlohmann::json j;
  j["input_dim"] = input_dim_;
  j["exponents"] = exponents_;
  if (normalized()) {
    j["means"] = means_;
    j["sds"] = sds_;
  } else {
    j["means"] = nlohmann::json::array();
    j["sds"] = nlohmann::json::array();
  }
  return j;
}

FeatureMap FeatureMap::from_json(const nlohmann::json& j) {
  try {
    FeatureMap m(j.at("input_dim").get<std::size_t>(), j.at("exponents").get<std::vector<std::vector<int>>>());
    m.set_normalization(j.at("means").get<std::vector<double>>(), j.at("sds").get<std::vector<double>>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed feature map: ") + e.what());
  }
}

int LinearPolicy::decide(std::span<const double> phi) const {
  if (phi.size() != theta.size()) throw ValidationError("feature/parameter dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) s = s + phi[j] * theta[j];
  return s > 0.0 ? 1 : 0;
}

WelfareCost empirical_welfare_cost(std::span<const double> theta, const IPWScores& scores,
                                   const FeatureMatrix& features) {
  if (scores.size() != features.observations()) throw ValidationError("scores and features have different lengths");
  if (theta.size() != features.features()) throw ValidationError("parameter and feature dimensions differ");
  if (scores.size() == 0) throw ValidationError("empty sample");
  const auto sums = kernels::active().score_sums(theta.data(), theta.size(), features.data(), features.observations(),
                                                 scores.delta_y.data(), scores.delta_c.data());
  const double n = static_cast<double>(scores.size());
  return {sums.welfare / n, sums.cost / n};
}

double empirical_welfare(const LinearPolicy& policy, const IPWScores& scores, const FeatureMatrix& features) {
  return empirical_welfare_cost(policy.theta, scores, features).welfare;
}

double empirical_cost(const LinearPolicy& policy, const IPWScores& scores, const FeatureMatrix& features) {
  return empirical_welfare_cost(policy.theta, scores, features).cost;
}

WelfareCost empirical_welfare_cost(std::span<const double> treat, const IPWScores& scores) {
  if (treat.size() != scores.size()) throw ValidationError("rule values and scores have different lengths");
  if (treat.empty()) throw ValidationError("empty sample");
  double w = 0.0, c = 0.0;
  for (std::size_t i = 0; i < treat.size(); ++i) {
    w += scores.delta_y[i] * treat[i];
    c += scores.delta_c[i] * treat[i];
  }
  const double n = static_cast<double>(treat.size());
  return {w / n, c / n};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& s, std::size_t line_no, const std::string& col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line_no) + ": column '" + col + "' is not a number: '" + s + "'");
  }
}

struct CsvTable {
  std::map<std::string, std::size_t> index;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::size_t covariate_count = 0;
};

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (t.header.empty()) {
      t.header = split_csv_line(line);
      for (std::size_t k = 0; k < t.header.size(); ++k) {
        if (!t.index.emplace(t.header[k], k).second) throw ValidationError("duplicate column '" + t.header[k] + "'");
      }
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw ValidationError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                            " fields, got " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw ValidationError(path + ": missing header");
  while (t.index.count("x" + std::to_string(t.covariate_count + 1))) ++t.covariate_count;
  if (t.covariate_count == 0) throw ValidationError(path + ": no covariate columns x1..xk");
  return t;
}

std::vector<double> row_covariates(const CsvTable& t, std::size_t r) {
  std::vector<double> x(t.covariate_count);
  for (std::size_t l = 0; l < t.covariate_count; ++l) {
    const std::string col = "x" + std::to_string(l + 1);
    x[l] = parse_cell(t.rows[r][t.index.at(col)], t.line_numbers[r], col);
  }
  return x;
}

}  // namespace

Sample read_sample_csv(const std::string& path, std::optional<double> constant_propensity, double kappa) {
  const CsvTable t = read_csv_table(path);
  for (const char* col : {"y", "c", "d"})
    if (!t.index.count(col)) throw ValidationError(path + ": missing column '" + col + "'");
  const bool has_e = t.index.count("e") > 0;
  if (!has_e && !constant_propensity) throw ValidationError(path + ": no 'e' column and no constant propensity given");
  if (t.rows.empty()) throw ValidationError(path + ": no data rows");

  Sample s;
  s.kappa = kappa;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Observation o;
    const std::size_t ln = t.line_numbers[r];
    o.y = parse_cell(t.rows[r][t.index.at("y")], ln, "y");
    o.c = parse_cell(t.rows[r][t.index.at("c")], ln, "c");
    const double d = parse_cell(t.rows[r][t.index.at("d")], ln, "d");
    if (d != 0.0 && d != 1.0) throw ValidationError("line " + std::to_string(ln) + ": d must be 0 or 1");
    o.d = static_cast<int>(d);
    o.x = row_covariates(t, r);
    s.observations.push_back(std::move(o));
    s.propensity.push_back(has_e ? parse_cell(t.rows[r][t.index.at("e")], ln, "e") : *constant_propensity);
  }
  s.validate();
  return s;
}

void write_sample_csv(const std::string& path, const Sample& sample) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path);
  out << "y,c,d";
  for (std::size_t l = 0; l < sample.covariate_dim(); ++l) out << ",x" << (l + 1);
  out << ",e\n";
  out.precision(17);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto& o = sample.observations[i];
    out << o.y << ',' << o.c << ',' << o.d;
    for (double v : o.x) out << ',' << v;
    out << ',' << sample.propensity[i] << '\n';
  }
  if (!out) throw RuntimeFailure("write failed: " + path);
}

std::vector<std::vector<double>> read_covariates_csv(const std::string& path) {
  const CsvTable t = read_csv_table(path);
  std::vector<std::vector<double>> xs;
  xs.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) xs.push_back(row_covariates(t, r));
  return xs;
}

}  // namespace pbpolicy
