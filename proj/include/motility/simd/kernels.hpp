#pragma once

// Data-parallel inner loops shared by the image, flow and network code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant compiled into a separate translation unit. The variant is
// chosen once at runtime from CPUID; MOTILITY_SIMD=scalar in the environment
// (or select()) pins the reference path. The two paths agree to within
// float rounding of a reordered sum; tests/unit/test_simd.cpp holds the bounds.

#include <cmath>
#include <cstddef>

namespace motility::simd {

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);

struct NadamCoeffs {
  float lr;
  float eps;
  float beta1;
  float beta2;
  float c_m;  // beta1 / (1 - beta1^(t+1))
  float c_g;  // (1 - beta1) / (1 - beta1^t)
  float c_v;  // 1 / (1 - beta2^t)
};

struct KernelTable {
  Isa isa;
  float (*dot)(const float* a, const float* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  // C[i*ldc + j] (+)= sum_p A[i*lda + p] * B[j*ldb + p], i < m, j < n, p < k
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                  const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate);
  void (*nadam)(float* theta, const float* grad, float* m, float* v, std::size_t n,
                const NadamCoeffs& coeffs);
  // Interleaved RGB -> luma with weights 0.299 / 0.587 / 0.114.
  void (*rgb_to_grey)(const float* rgb, float* grey, std::size_t pixels);
};

const KernelTable& scalar_kernels();
// nullptr when the variant was not compiled in.
const KernelTable* avx2_kernels();

bool cpu_supports(Isa isa);

// The table used by the convenience wrappers below.
const KernelTable& active();
Isa active_isa();
// Pins the active table. Throws motility::Error when the CPU lacks the ISA.
void select(Isa isa);

inline float dot(const float* a, const float* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(float alpha, const float* x, float* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                    const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  active().gemm_nt(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

// Double-precision overloads run the reference loops; they back the 64-bit
// gradient-check mode of the network code.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                    const double* b, std::size_t ldb, double* c, std::size_t ldc,
                    bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double s = dot(a + i * lda, b + j * ldb, k);
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + s : s;
    }
  }
}

}  // namespace motility::simd
