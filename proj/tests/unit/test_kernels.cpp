#include <cstring>
#include <vector>

#include "doctest.h"
#include "pbpolicy/kernels.hpp"
#include "pbpolicy/rng.hpp"

using namespace pbpolicy;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar reference on a hand example") {
    // phi = (1, x), theta = (-0.5, 1): treat x > 0.5.
    const std::vector<double> f{1, 1, 1, 1, 1, 0.0, 0.6, 0.5, 2.0, 0.7};
    const std::vector<double> dy{1, 2, 4, 8, 16}, dc{1, 1, 1, 1, 1};
    const double theta[2] = {-0.5, 1.0};
    const auto s = kernels::scalar_table().score_sums(theta, 2, f.data(), 5, dy.data(), dc.data());
    CHECK(s.welfare == 2 + 8 + 16);
    CHECK(s.cost == 3);
    std::vector<std::uint8_t> d(5);
    kernels::scalar_table().decisions(theta, 2, f.data(), 5, d.data());
    CHECK(d == std::vector<std::uint8_t>{0, 1, 0, 1, 1});
  }

  TEST_CASE("every available ISA reproduces the scalar kernels bit for bit") {
    if (!kernels::isa_available(kernels::Isa::avx2)) {
      MESSAGE("avx2 not available on this CPU; equivalence test skipped");
      return;
    }
    const auto& ref = kernels::table(kernels::Isa::scalar);
    const auto& simd = kernels::table(kernels::Isa::avx2);
    auto rng = make_stream(17, {1});
    for (std::size_t trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 137);
      const std::size_t q = 1 + static_cast<std::size_t>(uniform01(rng) * 11);
      std::vector<double> f(n * q), dy(n), dc(n), theta(q);
      for (auto& v : f) v = uniform01(rng) * 4 - 2;
      for (auto& v : dy) v = uniform01(rng) * 10 - 5;
      for (auto& v : dc) v = uniform01(rng) * 6 - 1;
      for (auto& v : theta) v = uniform01(rng) * 2 - 1;
      if (trial % 7 == 0) theta.assign(q, 0.0);  // all ties
      const auto a = ref.score_sums(theta.data(), q, f.data(), n, dy.data(), dc.data());
      const auto b = simd.score_sums(theta.data(), q, f.data(), n, dy.data(), dc.data());
      CHECK(same_bits(a.welfare, b.welfare));
      CHECK(same_bits(a.cost, b.cost));

      std::vector<double> va(n, 0.25), vb(n, 0.25);
      ref.accumulate_votes(theta.data(), q, f.data(), n, 0.3, va.data());
      simd.accumulate_votes(theta.data(), q, f.data(), n, 0.3, vb.data());
      CHECK(std::memcmp(va.data(), vb.data(), n * sizeof(double)) == 0);

      std::vector<std::uint8_t> da(n), db(n);
      ref.decisions(theta.data(), q, f.data(), n, da.data());
      simd.decisions(theta.data(), q, f.data(), n, db.data());
      CHECK(da == db);
    }
  }

  TEST_CASE("forcing an ISA changes the active table") {
    const auto before = kernels::active_isa();
    kernels::force_isa(kernels::Isa::scalar);
    CHECK(kernels::active_isa() == kernels::Isa::scalar);
    CHECK(&kernels::active() == &kernels::scalar_table());
    kernels::force_isa(before);
    CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
  }
}
