#include <filesystem>
#include <set>

#include "doctest.h"
#include "pbpolicy/dgp.hpp"
#include "pbpolicy/error.hpp"
#include "pbpolicy/harness.hpp"

using namespace pbpolicy;

TEST_SUITE("harness") {
  TEST_CASE("cost curve interpolation, dedup and clamping") {
    const CostCurve line({{0, 0}, {1, 1}}, "m");
    CHECK(line.gain_at(0.5) == doctest::Approx(0.5));
    const CostCurve dup({{0, 0}, {1, 0.4}, {1, 0.6}}, "m");
    CHECK(dup.points().size() == 2);
    CHECK(dup.points().back().second == 0.6);
    bool clamped = false;
    CHECK(line.gain_at(2.0, &clamped) == 1.0);
    CHECK(clamped);
    line.gain_at(0.3, &clamped);
    CHECK_FALSE(clamped);
    CHECK_THROWS_AS(CostCurve({{1, 0}, {1, 1}}, "m"), ValidationError);
  }

  TEST_CASE("curve averaging") {
    const std::vector<double> q{0.0, 0.5, 1.0};
    const std::vector<CostCurve> lines{CostCurve({{0, 0}, {1, 1}}, "a"), CostCurve({{0, 0}, {1, 3}}, "a")};
    const auto avg = average_curves(lines, q);
    CHECK(avg.gain_mean[1] == doctest::Approx(1.0));
    CHECK(avg.gain_mean[2] == doctest::Approx(2.0));
    CHECK(avg.n_reps == 2);
    const std::vector<CostCurve> one{lines[0]};
    const auto self = average_curves(one, q);
    CHECK(self.gain_mean[1] == doctest::Approx(0.5));
    CHECK(self.gain_se[1] == 0.0);
    const std::vector<CostCurve> same{lines[0], lines[0]};
    CHECK(average_curves(same, q).gain_mean == self.gain_mean);
  }

  TEST_CASE("greedy batch baseline") {
    const std::vector<double> s{2, 1}, c{1, 1}, g{0.5, 0.25};
    CHECK(greedy_batch(s, c, g, 0.0).cost == 0.0);
    const auto one = greedy_batch(s, c, g, 1.0);
    CHECK(one.cost == 1.0);
    CHECK(one.gain == 0.5);
    const std::vector<double> s2{2, -1, 1};
    const auto all = greedy_batch(s2, std::vector<double>{1, 1, 1}, std::vector<double>{1, 1, 1}, 3.0);
    CHECK(all.cost == 2.0);  // the negative-score unit is never treated
  }

  TEST_CASE("folds partition the sample deterministically") {
    const auto f = make_folds(11, 3, 5);
    std::set<std::size_t> all;
    for (const auto& b : f) all.insert(b.begin(), b.end());
    CHECK(all.size() == 11);
    CHECK(f == make_folds(11, 3, 5));
    CHECK(f != make_folds(11, 3, 6));
    CHECK_THROWS_AS(make_folds(3, 1, 1), ValidationError);
  }

  TEST_CASE("cross-validation") {
    const auto pop = generate({DgpId::dgp1, 3, 200}, 1);
    FeatureMap map = FeatureMap::polynomial(2, 3);
    map.fit_normalization(pop.covariates());
    SMCConfig smc;
    smc.n_particles = 150;
    const std::vector<double> single{8.0};
    const auto cv1 = cross_validate(0.5, single, pop.sample, map, 2, smc, 1);
    CHECK(cv1.lambdas.size() == 1);
    CHECK(cv1.lambda_for(RuleKind::gibbs) == doctest::Approx(8.0).epsilon(0.05));
    const std::vector<double> grid{4.0, 16.0, 64.0};
    const auto a = cross_validate(0.5, grid, pop.sample, map, 2, smc, 9);
    const auto b = cross_validate(0.5, grid, pop.sample, map, 2, smc, 9);
    CHECK(a.objective_gibbs == b.objective_gibbs);
    CHECK(a.lambda_for(RuleKind::mv) == b.lambda_for(RuleKind::mv));
    for (std::size_t k = 0; k < grid.size(); ++k)
      CHECK(a.objective_gibbs[a.best_gibbs] >= a.objective_gibbs[k]);
  }

  TEST_CASE("grid defaults") {
    const auto g = GridSpec::defaults();
    CHECK(g.u_grid.size() == 41);
    CHECK(g.u_grid.front() == 0.0);
    CHECK(g.u_grid[1] == doctest::Approx(0.2));
    CHECK(g.u_grid.back() == doctest::Approx(4.0));
    CHECK(g.lambda_targets.size() == 17);
  }

  TEST_CASE("one-replication smoke study emits every artifact") {
    namespace fs = std::filesystem;
    StudyConfig c;
    c.dgp = DgpId::dgp2;
    c.replications = 1;
    c.n = 200;
    c.n_test = 2000;
    c.smc.n_particles = 500;
    c.grids.u_grid = GridSpec::u_grid_linspace(0.5, 2.0, 3);
    c.threads = 1;
    const auto report = run_study(c, false);
    const auto dir = fs::temp_directory_path() / "pbpolicy_smoke_study";
    fs::remove_all(dir);
    write_study_outputs(report, dir.string());
    for (const char* m : kMethods) CHECK(fs::exists(dir / (std::string("cost_curves_") + m + ".csv")));
    CHECK(fs::exists(dir / "replication_0.json"));
    CHECK(fs::exists(dir / "study_config.json"));
    CHECK(fs::exists(dir / "study_summary.json"));
    CHECK(report.curves.at("random").gain_at(0.5) == doctest::Approx(0.5).epsilon(0.04));
    CHECK(report.replications[0].batch.back().cost <= report.always_treat_cost + 1e-12);
  }
}
