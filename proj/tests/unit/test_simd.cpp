#include <cmath>
#include <vector>

#include "doctest.h"
#include "motility/rng.hpp"
#include "motility/simd/kernels.hpp"

using namespace motility;
using namespace motility::simd;

namespace {

std::vector<float> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.uniform(-scale, scale));
  return v;
}

// Bound for two float summation orders of n products of magnitude <= 1.
double sum_bound(std::size_t n) { return 4.0 * static_cast<double>(n + 1) * 6e-8; }

const std::size_t kSizes[] = {0, 1, 3, 7, 8, 9, 15, 16, 17, 31, 33, 64, 100, 257, 1000};

}  // namespace

TEST_CASE("scalar reference kernels") {
  const auto& s = scalar_kernels();
  const float a[3] = {1, 2, 3};
  const float b[3] = {4, 5, 6};
  CHECK(s.dot(a, b, 3) == 32.0f);
  float y[3] = {1, 1, 1};
  s.axpy(2.0f, a, y, 3);
  CHECK(y[2] == 7.0f);
  // [1 2 3] x [4 5 6]^T and [1 2 3] x [1 0 0]^T
  const float bt[6] = {4, 5, 6, 1, 0, 0};
  float c[2] = {10, 10};
  s.gemm_nt(1, 2, 3, a, 3, bt, 3, c, 2, false);
  CHECK(c[0] == 32.0f);
  CHECK(c[1] == 1.0f);
  s.gemm_nt(1, 2, 3, a, 3, bt, 3, c, 2, true);
  CHECK(c[0] == 64.0f);
  const float rgb[3] = {255, 0, 0};
  float g = 0;
  s.rgb_to_grey(rgb, &g, 1);
  CHECK(g == doctest::Approx(76.245f));
}

TEST_CASE("dispatch selection") {
  CHECK(isa_name(Isa::Scalar) != nullptr);
  const Isa before = active_isa();
  select(Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  if (avx2_kernels() && cpu_supports(Isa::Avx2)) {
    select(Isa::Avx2);
    CHECK(active_isa() == Isa::Avx2);
  }
  select(before);
}

TEST_CASE("avx2 matches the scalar reference") {
  const KernelTable* v = avx2_kernels();
  if (!v || !cpu_supports(Isa::Avx2)) {
    MESSAGE("AVX2 not available; nothing to compare");
    return;
  }
  const auto& s = scalar_kernels();
  Rng rng(21);

  for (std::size_t n : kSizes) {
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    CHECK(std::abs(v->dot(a.data(), b.data(), n) - s.dot(a.data(), b.data(), n)) <= sum_bound(n));

    // Fused multiply-add rounds once, the reference twice.
    auto y1 = random_vec(n, rng);
    auto y2 = y1;
    const auto y0 = y1;
    v->axpy(0.37f, a.data(), y1.data(), n);
    s.axpy(0.37f, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::abs(y1[i] - y2[i]) <= 1.2e-7 * (std::abs(0.37f * a[i]) + std::abs(y0[i])));

    std::vector<float> rgb = random_vec(3 * n, rng, 255.0);
    std::vector<float> g1(n), g2(n);
    v->rgb_to_grey(rgb.data(), g1.data(), n);
    s.rgb_to_grey(rgb.data(), g2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(g1[i] - g2[i]) <= 1e-4f);
  }

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(9), n = 1 + rng.below(13), k = rng.below(70);
    const std::size_t lda = k + rng.below(3), ldb = k + rng.below(3), ldc = n + rng.below(3);
    const auto a = random_vec(m * lda, rng);
    const auto b = random_vec(n * ldb, rng);
    auto c1 = random_vec(m * ldc, rng);
    auto c2 = c1;
    const bool acc = trial % 2;
    v->gemm_nt(m, n, k, a.data(), lda, b.data(), ldb, c1.data(), ldc, acc);
    s.gemm_nt(m, n, k, a.data(), lda, b.data(), ldb, c2.data(), ldc, acc);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < ldc; ++j) {
        const double tol = j < n ? sum_bound(k) + 1e-6 : 0.0;
        CHECK(std::abs(c1[i * ldc + j] - c2[i * ldc + j]) <= tol);
      }
  }
}

TEST_CASE("avx2 nadam is bitwise equal to the scalar reference") {
  const KernelTable* v = avx2_kernels();
  if (!v || !cpu_supports(Isa::Avx2)) return;
  const auto& s = scalar_kernels();
  Rng rng(8);
  for (std::size_t n : kSizes) {
    auto theta1 = random_vec(n, rng);
    auto m1 = random_vec(n, rng, 0.1);
    std::vector<float> v1(n);
    for (float& x : v1) x = static_cast<float>(rng.uniform(0.0, 0.01));
    auto theta2 = theta1, m2 = m1, v2 = v1;
    for (int t = 1; t <= 3; ++t) {
      const auto grad = random_vec(n, rng);
      const float b1 = 0.9f, b2 = 0.999f;
      const NadamCoeffs c{0.002f, 1e-7f, b1, b2,
                          static_cast<float>(b1 / (1 - std::pow(b1, t + 1))),
                          static_cast<float>((1 - b1) / (1 - std::pow(b1, t))),
                          static_cast<float>(1 / (1 - std::pow(b2, t)))};
      v->nadam(theta1.data(), grad.data(), m1.data(), v1.data(), n, c);
      s.nadam(theta2.data(), grad.data(), m2.data(), v2.data(), n, c);
    }
    CHECK(theta1 == theta2);
    CHECK(m1 == m2);
    CHECK(v1 == v2);
  }
}
