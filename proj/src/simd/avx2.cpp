// AVX2 variants of the scalar kernels. Compiled without -mavx2; each function
// carries its own target attribute so the rest of the binary stays baseline.

#include "hap/simd/kernel_set.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define HAP_HAVE_AVX2_BUILD 1
#include <immintrin.h>

#include <cmath>
#include <limits>

#include "simd/top2_merge.hpp"
#endif

namespace hap::simd {

#if defined(HAP_HAVE_AVX2_BUILD)
namespace {

#define HAP_AVX2 __attribute__((target("avx2")))

HAP_AVX2 Top2 add_top2(const double* a, const double* b, std::size_t n) {
  if (n < 8) return scalar_kernels().add_top2(a, b, n);

  __m256d m1 = _mm256_add_pd(_mm256_loadu_pd(a), _mm256_loadu_pd(b));
  __m256d m2 = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d id = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  __m256d idx = _mm256_setr_pd(4.0, 5.0, 6.0, 7.0);
  const __m256d step = _mm256_set1_pd(4.0);

  const std::size_t body = n & ~std::size_t{3};
  for (std::size_t k = 4; k < body; k += 4) {
    const __m256d v = _mm256_add_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    const __m256d gt = _mm256_cmp_pd(v, m1, _CMP_GT_OQ);
    m2 = _mm256_blendv_pd(_mm256_max_pd(m2, v), m1, gt);
    m1 = _mm256_blendv_pd(m1, v, gt);
    id = _mm256_blendv_pd(id, idx, gt);
    idx = _mm256_add_pd(idx, step);
  }

  alignas(32) double first[4], second[4], index[4];
  _mm256_store_pd(first, m1);
  _mm256_store_pd(second, m2);
  _mm256_store_pd(index, id);
  Top2 top{first[0], second[0], static_cast<std::size_t>(index[0])};
  for (int lane = 1; lane < 4; ++lane) {
    top = top2_merge(top, {first[lane], second[lane], static_cast<std::size_t>(index[lane])});
  }
  for (std::size_t k = body; k < n; ++k) top2_push(top, a[k] + b[k], k);
  return top2_finish(top);
}

HAP_AVX2 void responsibility_fill(const double* s, std::size_t n, double tau, Top2 top,
                                  double* out) {
  const double shift = min_sel(tau, -top.first);
  const __m256d vs = _mm256_set1_pd(shift);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(s + j), vs));
  for (; j < n; ++j) out[j] = s[j] + shift;
  if (n > 0) out[top.first_index] = s[top.first_index] + min_sel(tau, -top.second);
}

HAP_AVX2 void availability_fill(const double* rho, std::size_t n, double base, double total,
                                double* out) {
  const __m256d vb = _mm256_set1_pd(base);
  const __m256d vt = _mm256_set1_pd(total);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d pos = _mm256_max_pd(_mm256_loadu_pd(rho + i), zero);
    const __m256d v = _mm256_add_pd(vb, _mm256_sub_pd(vt, pos));
    _mm256_storeu_pd(out + i, _mm256_min_pd(v, zero));
  }
  for (; i < n; ++i) out[i] = min_sel(base + (total - max_sel(rho[i], 0.0)), 0.0);
}

HAP_AVX2 void damp(const double* old_v, const double* fresh, std::size_t n, double lambda,
                   double* out) {
  const double keep = 1.0 - lambda;
  const __m256d vl = _mm256_set1_pd(lambda);
  const __m256d vk = _mm256_set1_pd(keep);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d o = _mm256_loadu_pd(old_v + k);
    const __m256d f = _mm256_loadu_pd(fresh + k);
    const __m256d mixed = _mm256_add_pd(_mm256_mul_pd(vl, o), _mm256_mul_pd(vk, f));
    _mm256_storeu_pd(out + k, _mm256_blendv_pd(mixed, o, _mm256_cmp_pd(o, f, _CMP_EQ_OQ)));
  }
  for (; k < n; ++k) out[k] = old_v[k] == fresh[k] ? old_v[k] : lambda * old_v[k] + keep * fresh[k];
}

HAP_AVX2 void shift_clamp(const double* s, std::size_t n, double shift, double* out) {
  const __m256d vs = _mm256_set1_pd(shift);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(out + k, _mm256_min_pd(_mm256_add_pd(_mm256_loadu_pd(s + k), vs), zero));
  }
  for (; k < n; ++k) out[k] = min_sel(s[k] + shift, 0.0);
}

HAP_AVX2 void neg_distances(const double* coords, std::size_t n, std::size_t dim, const double* x,
                            bool root, double* out) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dim; ++d) {
      const __m256d diff = _mm256_sub_pd(_mm256_set1_pd(x[d]), _mm256_loadu_pd(coords + d * n + j));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
    }
    if (root) acc = _mm256_sqrt_pd(acc);
    _mm256_storeu_pd(out + j, _mm256_xor_pd(acc, sign));
  }
  for (; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = x[d] - coords[d * n + j];
      acc = acc + diff * diff;
    }
    out[j] = root ? -std::sqrt(acc) : -acc;
  }
}

#undef HAP_AVX2

}  // namespace

const KernelSet* avx2_kernels() noexcept {
  static const bool supported = __builtin_cpu_supports("avx2");
  static const KernelSet set{"avx2",        add_top2,    responsibility_fill, availability_fill,
                             damp,          shift_clamp, neg_distances};
  return supported ? &set : nullptr;
}

#else

const KernelSet* avx2_kernels() noexcept { return nullptr; }

#endif

}  // namespace hap::simd
