#include <limits>

#include "prio/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define PRIO_HAVE_X86 1
#endif

namespace prio::detail {

#ifdef PRIO_HAVE_X86

__attribute__((target("avx2"))) void threshold_batch_avx2(const ThresholdParams& p, const double* in,
                                                          double* out, std::size_t n) {
  const __m256d shift = _mm256_set1_pd(p.shift);
  const __m256d in_off = _mm256_set1_pd(p.in_offset);
  const __m256d out_off = _mm256_set1_pd(p.out_offset);
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t k = 0;

  if (p.kind == ThresholdKind::Ellipse) {
    const __m256d d2 = _mm256_set1_pd(p.diameter_sq);
    const __m256d s2 = _mm256_set1_pd(p.sin_sq);
    const __m256d c = _mm256_set1_pd(p.cos_theta);
    const __m256d half = _mm256_set1_pd(p.half_extent);
    const __m256d neg_half = _mm256_set1_pd(-p.half_extent);
    const __m256d stat = _mm256_set1_pd(p.stationary);
    const __m256d zero = _mm256_setzero_pd();
    for (; k + 4 <= n; k += 4) {
      const __m256d x = _mm256_loadu_pd(in + k);
      const __m256d a = _mm256_sub_pd(_mm256_sub_pd(x, shift), in_off);
      __m256d q = _mm256_sub_pd(d2, _mm256_mul_pd(_mm256_mul_pd(a, a), s2));
      q = _mm256_max_pd(q, zero);
      const __m256d lower = _mm256_sub_pd(_mm256_mul_pd(a, c), _mm256_sqrt_pd(q));
      __m256d h = _mm256_blendv_pd(lower, neg_half, _mm256_cmp_pd(a, stat, _CMP_LE_OQ));
      h = _mm256_blendv_pd(h, inf, _mm256_cmp_pd(a, half, _CMP_GE_OQ));
      _mm256_storeu_pd(out + k, _mm256_sub_pd(_mm256_add_pd(out_off, h), shift));
    }
  } else {
    const __m256d len = _mm256_set1_pd(p.length);
    const __m256d in_lo = _mm256_set1_pd(p.in_lo);
    const __m256d in_hi = _mm256_set1_pd(p.in_hi);
    const __m256d out_lo = _mm256_set1_pd(p.out_lo);
    const __m256d out_hi = _mm256_set1_pd(p.out_hi);
    for (; k + 4 <= n; k += 4) {
      const __m256d x = _mm256_loadu_pd(in + k);
      const __m256d a = _mm256_sub_pd(_mm256_sub_pd(x, shift), in_off);
      const __m256d am = _mm256_blendv_pd(in_lo, a, _mm256_cmp_pd(a, in_lo, _CMP_GT_OQ));
      const __m256d bl = _mm256_sub_pd(am, len);
      __m256d h = _mm256_blendv_pd(out_lo, bl, _mm256_cmp_pd(bl, out_lo, _CMP_GT_OQ));
      h = _mm256_blendv_pd(h, inf, _mm256_cmp_pd(am, in_hi, _CMP_GE_OQ));
      h = _mm256_blendv_pd(h, inf, _mm256_cmp_pd(bl, out_hi, _CMP_GE_OQ));
      _mm256_storeu_pd(out + k, _mm256_sub_pd(_mm256_add_pd(out_off, h), shift));
    }
  }
  threshold_batch_scalar(p, in + k, out + k, n - k);
}

#else

void threshold_batch_avx2(const ThresholdParams& p, const double* in, double* out, std::size_t n) {
  threshold_batch_scalar(p, in, out, n);
}

#endif

}  // namespace prio::detail
