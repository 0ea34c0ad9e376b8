#include <cmath>

#include "motility/simd/kernels.hpp"

namespace motility::simd {

namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
  float s = 0.0f;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt_scalar(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                    const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const float* arow = a + i * lda;
    for (std::size_t j = 0; j < n; ++j) {
      const float s = dot_scalar(arow, b + j * ldb, k);
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + s : s;
    }
  }
}

void nadam_scalar(float* theta, const float* grad, float* m, float* v, std::size_t n,
                  const NadamCoeffs& k) {
  const float one_minus_b1 = 1.0f - k.beta1;
  const float one_minus_b2 = 1.0f - k.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const float g = grad[i];
    m[i] = k.beta1 * m[i] + one_minus_b1 * g;
    v[i] = k.beta2 * v[i] + one_minus_b2 * (g * g);
    const float numer = k.c_m * m[i] + k.c_g * g;
    const float denom = std::sqrt(k.c_v * v[i]) + k.eps;
    theta[i] -= k.lr * (numer / denom);
  }
}

void rgb_to_grey_scalar(const float* rgb, float* grey, std::size_t pixels) {
  for (std::size_t i = 0; i < pixels; ++i) {
    grey[i] = 0.299f * rgb[3 * i] + 0.587f * rgb[3 * i + 1] + 0.114f * rgb[3 * i + 2];
  }
}

constexpr KernelTable kScalarTable{
    Isa::Scalar, dot_scalar, axpy_scalar, gemm_nt_scalar, nadam_scalar, rgb_to_grey_scalar,
};

}  // namespace

const KernelTable& scalar_kernels() { return kScalarTable; }

}  // namespace motility::simd
