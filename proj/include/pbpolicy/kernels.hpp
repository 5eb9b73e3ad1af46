#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace pbpolicy::kernels {

// Instruction-set variants of the inner loops. The scalar variant is the
// reference; every other variant must reproduce it bit for bit.
enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct ScoreSums {
  double welfare = 0.0;  // sum_i dy_i 1{phi_i' theta > 0}
  double cost = 0.0;     // sum_i dc_i 1{phi_i' theta > 0}
};

// Kernels operate on a feature-major matrix: features[j * n + i] = phi_j(X_i).
//
// Reduction order is fixed so results do not depend on the ISA: the first
// n - n % 4 observations are accumulated in four lane-striped partial sums
// (lane = i % 4), combined as (l0 + l2) + (l1 + l3), and the remaining tail
// is then added sequentially. Dot products are accumulated over j in order
// with separate multiply and add (no FMA contraction).
struct KernelTable {
  ScoreSums (*score_sums)(const double* theta, std::size_t q, const double* features, std::size_t n,
                          const double* dy, const double* dc);
  // votes[i] += weight * 1{phi_i' theta > 0}
  void (*accumulate_votes)(const double* theta, std::size_t q, const double* features, std::size_t n,
                           double weight, double* votes);
  // out[i] = 1{phi_i' theta > 0}
  void (*decisions)(const double* theta, std::size_t q, const double* features, std::size_t n,
                    std::uint8_t* out);
};

const KernelTable& scalar_table();
#if defined(PBPOLICY_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

// True when the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa);
const KernelTable& table(Isa isa);

// The variant used by the library. Defaults to the best available ISA; the
// PBPOLICY_KERNEL environment variable ("scalar" / "avx2") overrides it.
Isa active_isa();
void force_isa(Isa isa);
const KernelTable& active();

}  // namespace pbpolicy::kernels
