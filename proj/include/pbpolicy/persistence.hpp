#pragma once

#include <map>
#include <string>

#include "json.hpp"
#include "pbpolicy/bounds.hpp"
#include "pbpolicy/dgp.hpp"
#include "pbpolicy/gibbs_posterior.hpp"
#include "pbpolicy/policy_rules.hpp"
#include "pbpolicy/smc.hpp"

namespace pbpolicy {

constexpr int kSchemaVersion = 1;

// {"schema_version": 1, "kind": kind, "data": payload}
nlohmann::json wrap(const std::string& kind, nlohmann::json payload);
// Hard error on a different schema_version or kind.
const nlohmann::json& unwrap(const nlohmann::json& doc, const std::string& kind);

// Doubles are written in shortest round-trip form, so reloads are bit-exact.
std::string dump_json(const nlohmann::json& j);
// Writes to a sibling temporary file and renames it over `path`.
void write_text_atomic(const std::string& path, const std::string& text);
void save_json_atomic(const std::string& path, const nlohmann::json& j);
nlohmann::json load_json(const std::string& path);

void save_particles(const std::string& path, const WeightedParticles& p);
WeightedParticles load_particles(const std::string& path);
void save_grid_posterior(const std::string& path, const GridPosterior& g);
GridPosterior load_grid_posterior(const std::string& path);
void save_population(const std::string& path, const SimulatedPopulation& pop);
SimulatedPopulation load_population(const std::string& path);
void save_bound_report(const std::string& path, const BoundReport& r);
BoundReport load_bound_report(const std::string& path);
void save_rule(const std::string& path, const GibbsRule& rule, const nlohmann::json& metadata = nlohmann::json::object());
GibbsRule load_rule(const std::string& path);

// Named fixture blobs stored in one versioned file.
struct FixtureSet {
  std::map<std::string, nlohmann::json> blobs;
};
void save_fixtures(const std::string& path, const FixtureSet& f);
FixtureSet load_fixtures(const std::string& path);

}  // namespace pbpolicy
