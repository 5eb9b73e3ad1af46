#include "pbpolicy/persistence.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pbpolicy/error.hpp"

namespace pbpolicy {

nlohmann::json wrap(const std::string& kind, nlohmann::json payload) {
  return {{"schema_version", kSchemaVersion}, {"kind", kind}, {"data", std::move(payload)}};
}

const nlohmann::json& unwrap(const nlohmann::json& doc, const std::string& kind) {
  if (!doc.is_object() || !doc.contains("schema_version") || !doc.contains("kind") || !doc.contains("data"))
    throw ValidationError("not a versioned document (expected schema_version, kind, data)");
  if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kSchemaVersion)
    throw ValidationError("unsupported schema_version " + doc["schema_version"].dump() + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
  if (doc["kind"] != kind) throw ValidationError("expected a '" + kind + "' document, got " + doc["kind"].dump());
  return doc["data"];
}

std::string dump_json(const nlohmann::json& j) { return j.dump(1) + "\n"; }

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw RuntimeFailure("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw RuntimeFailure("cannot move " + tmp.string() + " to " + path + ": " + ec.message());
  }
}

void save_json_atomic(const std::string& path, const nlohmann::json& j) { write_text_atomic(path, dump_json(j)); }

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what());
  }
}

void save_particles(const std::string& path, const WeightedParticles& p) {
  save_json_atomic(path, wrap("particles", to_json(p)));
}
WeightedParticles load_particles(const std::string& path) {
  return particles_from_json(unwrap(load_json(path), "particles"));
}

void save_grid_posterior(const std::string& path, const GridPosterior& g) {
  save_json_atomic(path, wrap("grid_posterior", to_json(g)));
}
GridPosterior load_grid_posterior(const std::string& path) {
  return grid_posterior_from_json(unwrap(load_json(path), "grid_posterior"));
}

void save_population(const std::string& path, const SimulatedPopulation& pop) {
  save_json_atomic(path, wrap("population", to_json(pop)));
}
SimulatedPopulation load_population(const std::string& path) {
  return population_from_json(unwrap(load_json(path), "population"));
}

void save_bound_report(const std::string& path, const BoundReport& r) {
  save_json_atomic(path, wrap("bound_report", to_json(r)));
}
BoundReport load_bound_report(const std::string& path) {
  return bound_report_from_json(unwrap(load_json(path), "bound_report"));
}

void save_rule(const std::string& path, const GibbsRule& rule, const nlohmann::json& metadata) {
  nlohmann::json payload = rule.to_json();
  payload["metadata"] = metadata;
  save_json_atomic(path, wrap("rule", std::move(payload)));
}
GibbsRule load_rule(const std::string& path) { return GibbsRule::from_json(unwrap(load_json(path), "rule")); }

void save_fixtures(const std::string& path, const FixtureSet& f) {
  save_json_atomic(path, wrap("fixtures", nlohmann::json(f.blobs)));
}
FixtureSet load_fixtures(const std::string& path) {
  const nlohmann::json doc = load_json(path);
  const auto& data = unwrap(doc, "fixtures");
  if (!data.is_object()) throw ValidationError("fixture payload must be an object");
  FixtureSet f;
  for (auto it = data.begin(); it != data.end(); ++it) f.blobs[it.key()] = it.value();
  return f;
}

}  // namespace pbpolicy
