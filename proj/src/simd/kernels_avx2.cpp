// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include "motility/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#define MOTILITY_HAVE_AVX2 1
#include <immintrin.h>
#endif

namespace motility::simd {

#ifdef MOTILITY_HAVE_AVX2

namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

// Reduces four accumulators to one vector of four lane sums.
inline __m128 hsum4(__m256 a, __m256 b, __m256 c, __m256 d) {
  __m256 ab = _mm256_hadd_ps(a, b);
  __m256 cd = _mm256_hadd_ps(c, d);
  __m256 abcd = _mm256_hadd_ps(ab, cd);
  return _mm_add_ps(_mm256_castps256_ps128(abcd), _mm256_extractf128_ps(abcd, 1));
}

float dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  }
  float s = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// 2 x 4 register block: two rows of A against four rows of B.
inline void block_2x4(std::size_t k, const float* a0, const float* a1, const float* b0,
                      const float* b1, const float* b2, const float* b3, float out[2][4]) {
  __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
  __m256 c02 = _mm256_setzero_ps(), c03 = _mm256_setzero_ps();
  __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
  __m256 c12 = _mm256_setzero_ps(), c13 = _mm256_setzero_ps();
  std::size_t p = 0;
  for (; p + 8 <= k; p += 8) {
    const __m256 va0 = _mm256_loadu_ps(a0 + p);
    const __m256 va1 = _mm256_loadu_ps(a1 + p);
    __m256 vb = _mm256_loadu_ps(b0 + p);
    c00 = _mm256_fmadd_ps(va0, vb, c00);
    c10 = _mm256_fmadd_ps(va1, vb, c10);
    vb = _mm256_loadu_ps(b1 + p);
    c01 = _mm256_fmadd_ps(va0, vb, c01);
    c11 = _mm256_fmadd_ps(va1, vb, c11);
    vb = _mm256_loadu_ps(b2 + p);
    c02 = _mm256_fmadd_ps(va0, vb, c02);
    c12 = _mm256_fmadd_ps(va1, vb, c12);
    vb = _mm256_loadu_ps(b3 + p);
    c03 = _mm256_fmadd_ps(va0, vb, c03);
    c13 = _mm256_fmadd_ps(va1, vb, c13);
  }
  alignas(16) float r0[4];
  alignas(16) float r1[4];
  _mm_store_ps(r0, hsum4(c00, c01, c02, c03));
  _mm_store_ps(r1, hsum4(c10, c11, c12, c13));
  const float* bs[4] = {b0, b1, b2, b3};
  for (int q = 0; q < 4; ++q) {
    float s0 = r0[q];
    float s1 = r1[q];
    for (std::size_t t = p; t < k; ++t) {
      s0 += a0[t] * bs[q][t];
      s1 += a1[t] * bs[q][t];
    }
    out[0][q] = s0;
    out[1][q] = s1;
  }
}

void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                  const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  auto store = [&](std::size_t i, std::size_t j, float s) {
    c[i * ldc + j] = accumulate ? c[i * ldc + j] + s : s;
  };
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const float* a0 = a + i * lda;
    const float* a1 = a0 + lda;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      float out[2][4];
      const float* bj = b + j * ldb;
      block_2x4(k, a0, a1, bj, bj + ldb, bj + 2 * ldb, bj + 3 * ldb, out);
      for (int q = 0; q < 4; ++q) {
        store(i, j + q, out[0][q]);
        store(i + 1, j + q, out[1][q]);
      }
    }
    for (; j < n; ++j) {
      store(i, j, dot_avx2(a0, b + j * ldb, k));
      store(i + 1, j, dot_avx2(a1, b + j * ldb, k));
    }
  }
  for (; i < m; ++i) {
    const float* arow = a + i * lda;
    for (std::size_t j = 0; j < n; ++j) store(i, j, dot_avx2(arow, b + j * ldb, k));
  }
}

void nadam_avx2(float* theta, const float* grad, float* m, float* v, std::size_t n,
                const NadamCoeffs& k) {
  const __m256 b1 = _mm256_set1_ps(k.beta1);
  const __m256 b2 = _mm256_set1_ps(k.beta2);
  const __m256 omb1 = _mm256_set1_ps(1.0f - k.beta1);
  const __m256 omb2 = _mm256_set1_ps(1.0f - k.beta2);
  const __m256 cm = _mm256_set1_ps(k.c_m);
  const __m256 cg = _mm256_set1_ps(k.c_g);
  const __m256 cv = _mm256_set1_ps(k.c_v);
  const __m256 eps = _mm256_set1_ps(k.eps);
  const __m256 lr = _mm256_set1_ps(k.lr);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    __m256 vm = _mm256_add_ps(_mm256_mul_ps(b1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(omb1, g));
    __m256 vv = _mm256_add_ps(_mm256_mul_ps(b2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(omb2, _mm256_mul_ps(g, g)));
    _mm256_storeu_ps(m + i, vm);
    _mm256_storeu_ps(v + i, vv);
    const __m256 numer = _mm256_add_ps(_mm256_mul_ps(cm, vm), _mm256_mul_ps(cg, g));
    const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(cv, vv)), eps);
    const __m256 step = _mm256_mul_ps(lr, _mm256_div_ps(numer, denom));
    _mm256_storeu_ps(theta + i, _mm256_sub_ps(_mm256_loadu_ps(theta + i), step));
  }
  if (i < n) scalar_kernels().nadam(theta + i, grad + i, m + i, v + i, n - i, k);
}

void rgb_to_grey_avx2(const float* rgb, float* grey, std::size_t pixels) {
  const __m256i idx = _mm256_setr_epi32(0, 3, 6, 9, 12, 15, 18, 21);
  const __m256 wr = _mm256_set1_ps(0.299f);
  const __m256 wg = _mm256_set1_ps(0.587f);
  const __m256 wb = _mm256_set1_ps(0.114f);
  std::size_t i = 0;
  for (; i + 8 <= pixels; i += 8) {
    const float* base = rgb + 3 * i;
    const __m256 r = _mm256_i32gather_ps(base, idx, 4);
    const __m256 g = _mm256_i32gather_ps(base + 1, idx, 4);
    const __m256 b = _mm256_i32gather_ps(base + 2, idx, 4);
    const __m256 y = _mm256_add_ps(_mm256_add_ps(_mm256_mul_ps(wr, r), _mm256_mul_ps(wg, g)),
                                   _mm256_mul_ps(wb, b));
    _mm256_storeu_ps(grey + i, y);
  }
  if (i < pixels) scalar_kernels().rgb_to_grey(rgb + 3 * i, grey + i, pixels - i);
}

constexpr KernelTable kAvx2Table{
    Isa::Avx2, dot_avx2, axpy_avx2, gemm_nt_avx2, nadam_avx2, rgb_to_grey_avx2,
};

}  // namespace

const KernelTable* avx2_kernels() { return &kAvx2Table; }

#else

const KernelTable* avx2_kernels() { return nullptr; }

#endif

}  // namespace motility::simd
