#include "pbpolicy/kernels.hpp"

namespace pbpolicy::kernels {
namespace {

inline double project(const double* theta, std::size_t q, const double* features, std::size_t n, std::size_t i) {
  double s = 0.0;
  for (std::size_t j = 0; j < q; ++j) s = s + features[j * n + i] * theta[j];
  return s;
}

ScoreSums score_sums(const double* theta, std::size_t q, const double* features, std::size_t n, const double* dy,
                     const double* dc) {
  double wy[4] = {0.0, 0.0, 0.0, 0.0};
  double wc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t blocked = n - n % 4;
  for (std::size_t i = 0; i < blocked; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const bool on = project(theta, q, features, n, i + l) > 0.0;
      wy[l] = wy[l] + (on ? dy[i + l] : 0.0);
      wc[l] = wc[l] + (on ? dc[i + l] : 0.0);
    }
  }
  ScoreSums out{(wy[0] + wy[2]) + (wy[1] + wy[3]), (wc[0] + wc[2]) + (wc[1] + wc[3])};
  for (std::size_t i = blocked; i < n; ++i) {
    if (project(theta, q, features, n, i) > 0.0) {
      out.welfare += dy[i];
      out.cost += dc[i];
    }
  }
  return out;
}

void accumulate_votes(const double* theta, std::size_t q, const double* features, std::size_t n, double weight,
                      double* votes) {
  for (std::size_t i = 0; i < n; ++i) votes[i] = votes[i] + (project(theta, q, features, n, i) > 0.0 ? weight : 0.0);
}

void decisions(const double* theta, std::size_t q, const double* features, std::size_t n, std::uint8_t* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = project(theta, q, features, n, i) > 0.0 ? 1 : 0;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{&score_sums, &accumulate_votes, &decisions};
  return t;
}

}  // namespace pbpolicy::kernels
