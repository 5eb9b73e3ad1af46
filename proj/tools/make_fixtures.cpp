// Regenerates tests/fixtures/golden.json:
//   pbpolicy_make_fixtures <path>
// Only rerun after a deliberate change to the RNG, the DGPs or the bound
// formulas; the persistence tests compare fresh computations against it.

#include <cstdio>
#include <exception>

#include "pbpolicy/bounds.hpp"
#include "pbpolicy/dgp.hpp"
#include "pbpolicy/gibbs_posterior.hpp"
#include "pbpolicy/persistence.hpp"

using namespace pbpolicy;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <fixtures.json>\n", argv[0]);
    return 1;
  }
  try {
    FixtureSet f;
    f.blobs["two_point_softmax"] =
        to_json(grid_posterior({1.0, 0.0}, {0.0, 0.0}, {0.5, 0.5}, GibbsParams{1.0, 0.0, false}, 1.0));
    f.blobs["three_point_budget"] = to_json(grid_posterior({1.0, 0.5, 0.2}, {0.9, 0.4, 0.1}, {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                                           GibbsParams{4.0, 1.5, false}, 1.0));
    f.blobs["dgp1_n5_seed3"] = to_json(generate({DgpId::dgp1, 3, 5}, 1));
    f.blobs["dgp2_n5_seed3"] = to_json(generate({DgpId::dgp2, 3, 5}, 1));

    BoundInputs in;
    in.n = 100;
    in.kappa = 0.5;
    in.m_y = 1.0;
    in.m_c = 1.0;
    in.lambda = 10.0;
    in.epsilon = 0.05;
    in.q = 3.0;
    in.nu = 0.5;
    f.blobs["bound_report_n100"] = to_json(bound_report(in, 0.0, 0.4, 0.3));
    save_fixtures(argv[1], f);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
