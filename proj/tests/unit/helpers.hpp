#pragma once

#include <cstdint>
#include <vector>

#include "pbpolicy/core_data.hpp"
#include "pbpolicy/rng.hpp"

namespace testutil {

// Random sample with d_x covariates in [-1, 1], constant propensity 0.5.
inline pbpolicy::Sample random_sample(std::size_t n, std::size_t dx, std::uint64_t seed) {
  auto rng = pbpolicy::make_stream(seed, {99});
  std::vector<pbpolicy::Observation> obs;
  for (std::size_t i = 0; i < n; ++i) {
    pbpolicy::Observation o;
    for (std::size_t j = 0; j < dx; ++j) o.x.push_back(2.0 * pbpolicy::uniform01(rng) - 1.0);
    o.d = pbpolicy::uniform01(rng) < 0.5 ? 1 : 0;
    o.y = (o.d ? 1.0 + o.x[0] : 0.0) + pbpolicy::uniform01(rng);
    o.c = o.d ? 1.0 + pbpolicy::uniform01(rng) : 0.0;
    obs.push_back(std::move(o));
  }
  return pbpolicy::make_sample(std::move(obs), 0.5, 0.5);
}

}  // namespace testutil
