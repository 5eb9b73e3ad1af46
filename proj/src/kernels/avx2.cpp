#include <immintrin.h>

#include "pbpolicy/kernels.hpp"

namespace pbpolicy::kernels {
namespace {

// phi' theta for observations i..i+3.
inline __m256d project4(const double* theta, std::size_t q, const double* features, std::size_t n, std::size_t i) {
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t j = 0; j < q; ++j) {
    const __m256d f = _mm256_loadu_pd(features + j * n + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(f, _mm256_set1_pd(theta[j])));
  }
  return acc;
}

// Four independent blocks (observations i..i+15) to hide add latency; each
// observation still accumulates over j in order.
inline void project16(const double* theta, std::size_t q, const double* features, std::size_t n, std::size_t i,
                      __m256d out[4]) {
  __m256d a0 = _mm256_setzero_pd(), a1 = a0, a2 = a0, a3 = a0;
  for (std::size_t j = 0; j < q; ++j) {
    const double* col = features + j * n + i;
    const __m256d t = _mm256_set1_pd(theta[j]);
    a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_loadu_pd(col), t));
    a1 = _mm256_add_pd(a1, _mm256_mul_pd(_mm256_loadu_pd(col + 4), t));
    a2 = _mm256_add_pd(a2, _mm256_mul_pd(_mm256_loadu_pd(col + 8), t));
    a3 = _mm256_add_pd(a3, _mm256_mul_pd(_mm256_loadu_pd(col + 12), t));
  }
  out[0] = a0;
  out[1] = a1;
  out[2] = a2;
  out[3] = a3;
}

inline double project1(const double* theta, std::size_t q, const double* features, std::size_t n, std::size_t i) {
  double s = 0.0;
  for (std::size_t j = 0; j < q; ++j) s = s + features[j * n + i] * theta[j];
  return s;
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);  // (l0 + l2, l1 + l3)
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

ScoreSums score_sums(const double* theta, std::size_t q, const double* features, std::size_t n, const double* dy,
                     const double* dc) {
  const __m256d zero = _mm256_setzero_pd();
  __m256d wy = zero;
  __m256d wc = zero;
  const std::size_t blocked = n - n % 4;
  const std::size_t wide = n - n % 16;
  for (std::size_t i = 0; i < wide; i += 16) {
    __m256d p[4];
    project16(theta, q, features, n, i, p);
    for (int b = 0; b < 4; ++b) {
      const __m256d mask = _mm256_cmp_pd(p[b], zero, _CMP_GT_OQ);
      wy = _mm256_add_pd(wy, _mm256_and_pd(mask, _mm256_loadu_pd(dy + i + 4 * b)));
      wc = _mm256_add_pd(wc, _mm256_and_pd(mask, _mm256_loadu_pd(dc + i + 4 * b)));
    }
  }
  for (std::size_t i = wide; i < blocked; i += 4) {
    const __m256d mask = _mm256_cmp_pd(project4(theta, q, features, n, i), zero, _CMP_GT_OQ);
    wy = _mm256_add_pd(wy, _mm256_and_pd(mask, _mm256_loadu_pd(dy + i)));
    wc = _mm256_add_pd(wc, _mm256_and_pd(mask, _mm256_loadu_pd(dc + i)));
  }
  ScoreSums out{hsum(wy), hsum(wc)};
  for (std::size_t i = blocked; i < n; ++i) {
    if (project1(theta, q, features, n, i) > 0.0) {
      out.welfare += dy[i];
      out.cost += dc[i];
    }
  }
  return out;
}

void accumulate_votes(const double* theta, std::size_t q, const double* features, std::size_t n, double weight,
                      double* votes) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d w = _mm256_set1_pd(weight);
  const std::size_t blocked = n - n % 4;
  const std::size_t wide = n - n % 16;
  for (std::size_t i = 0; i < wide; i += 16) {
    __m256d p[4];
    project16(theta, q, features, n, i, p);
    for (int b = 0; b < 4; ++b) {
      double* v = votes + i + 4 * b;
      const __m256d mask = _mm256_cmp_pd(p[b], zero, _CMP_GT_OQ);
      _mm256_storeu_pd(v, _mm256_add_pd(_mm256_loadu_pd(v), _mm256_and_pd(mask, w)));
    }
  }
  for (std::size_t i = wide; i < blocked; i += 4) {
    const __m256d mask = _mm256_cmp_pd(project4(theta, q, features, n, i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(votes + i, _mm256_add_pd(_mm256_loadu_pd(votes + i), _mm256_and_pd(mask, w)));
  }
  for (std::size_t i = blocked; i < n; ++i)
    votes[i] = votes[i] + (project1(theta, q, features, n, i) > 0.0 ? weight : 0.0);
}

void decisions(const double* theta, std::size_t q, const double* features, std::size_t n, std::uint8_t* out) {
  const __m256d zero = _mm256_setzero_pd();
  const std::size_t blocked = n - n % 4;
  for (std::size_t i = 0; i < blocked; i += 4) {
    const int bits = _mm256_movemask_pd(_mm256_cmp_pd(project4(theta, q, features, n, i), zero, _CMP_GT_OQ));
    for (int l = 0; l < 4; ++l) out[i + l] = static_cast<std::uint8_t>((bits >> l) & 1);
  }
  for (std::size_t i = blocked; i < n; ++i) out[i] = project1(theta, q, features, n, i) > 0.0 ? 1 : 0;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{&score_sums, &accumulate_votes, &decisions};
  return t;
}

}  // namespace pbpolicy::kernels
