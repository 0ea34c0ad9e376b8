#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "motility/error.hpp"
#include "motility/imgproc.hpp"
#include "motility/rng.hpp"

using namespace motility;

namespace {

FrameTensor random_frame(int h, int w, int c, std::uint64_t seed) {
  Rng rng(seed);
  FrameTensor f(h, w, c);
  for (float& v : f.data()) v = static_cast<float>(rng.uniform(0.0, 255.0));
  return f;
}

FrameTensor solid(int h, int w, float r, float g, float b) {
  FrameTensor f(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.at(y, x, 0) = r;
      f.at(y, x, 1) = g;
      f.at(y, x, 2) = b;
    }
  return f;
}

}  // namespace

TEST_CASE("greyscale examples") {
  const auto white = to_greyscale(solid(3, 4, 255, 255, 255));
  for (float v : white.data()) CHECK(v == doctest::Approx(255.0).epsilon(1e-6));
  const auto black = to_greyscale(solid(3, 4, 0, 0, 0));
  for (float v : black.data()) CHECK(v == 0.0f);
  const auto red = to_greyscale(solid(3, 4, 255, 0, 0));
  for (float v : red.data()) CHECK(v == doctest::Approx(76.245).epsilon(1e-6));
  CHECK_THROWS_AS(to_greyscale(FrameTensor(2, 2, 1)), Error);
}

TEST_CASE("greyscale survives a broadcast round trip") {
  const auto grey = to_greyscale(random_frame(17, 23, 3, 1));
  const auto again = to_greyscale(grey_to_rgb(grey));
  for (std::size_t i = 0; i < grey.size(); ++i) CHECK(again.data()[i] == doctest::Approx(grey.data()[i]).epsilon(1e-6));
  CHECK(ensure_greyscale(grey) == grey);
}

TEST_CASE("resize examples") {
  const auto f = random_frame(13, 9, 3, 2);
  CHECK(resize_bilinear(f, 13, 9) == f);

  const FrameTensor c(10, 10, 2, 42.0f);
  const auto c2 = resize_bilinear(c, 37, 5);
  for (float v : c2.data()) CHECK(v == 42.0f);

  FrameTensor checker(2, 2, 1, std::vector<float>{0, 255, 255, 0});
  CHECK(resize_bilinear(checker, 1, 1).at(0, 0) == doctest::Approx(127.5));
  CHECK_THROWS_AS(resize_bilinear(f, 0, 3), Error);
}

TEST_CASE("resize uses pixel-center alignment") {
  // 1x4 ramp upsampled to 1x8: source x = (i + 0.5) / 2 - 0.5.
  FrameTensor row(1, 4, 1, std::vector<float>{0, 10, 20, 30});
  const auto up = resize_bilinear(row, 1, 8);
  const float expected[8] = {0, 2.5, 7.5, 12.5, 17.5, 22.5, 27.5, 30};
  for (int i = 0; i < 8; ++i) CHECK(up.at(0, i) == doctest::Approx(expected[i]));
}

TEST_CASE("resize stays inside the input range") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = random_frame(2 + rng.below(40), 2 + rng.below(40), 1 + 2 * (trial % 2), 100 + trial);
    const auto [lo, hi] = std::minmax_element(f.data().begin(), f.data().end());
    const auto g = resize_bilinear(f, 1 + rng.below(80), 1 + rng.below(80));
    for (float v : g.data()) {
      CHECK(v >= *lo);
      CHECK(v <= *hi);
    }
  }
}

TEST_CASE("normalize modes") {
  FrameTensor f(1, 3, 1, std::vector<float>{0.0f, 127.5f, 255.0f});
  const auto u = normalize(f, NormalizeMode::Unit);
  CHECK(u.at(0, 2) == 1.0f);
  CHECK(u.at(0, 0) == 0.0f);
  const auto s = normalize(f, NormalizeMode::Symmetric);
  CHECK(s.at(0, 0) == -1.0f);
  CHECK(s.at(0, 1) == 0.0f);
  CHECK(s.at(0, 2) == 1.0f);

  const auto r = random_frame(8, 8, 3, 9);
  const auto back = normalize(r, NormalizeMode::Unit);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(back.data()[i] * 255.0f - r.data()[i]) < 1e-4);
  CHECK(parse_normalize_mode(normalize_mode_name(NormalizeMode::Symmetric)) == NormalizeMode::Symmetric);
  CHECK_THROWS_AS(parse_normalize_mode("zscore"), Error);
}

TEST_CASE("flatten row major") {
  FrameTensor f(2, 2, 1, std::vector<float>{1, 2, 3, 4});
  CHECK(flatten_row_major(f) == std::vector<float>{1, 2, 3, 4});
  CHECK(flatten_row_major(FrameTensor(1, 1, 1, 7.0f)) == std::vector<float>{7});
  const auto big = random_frame(64, 64, 1, 4);
  const auto v = flatten_row_major(big);
  REQUIRE(v.size() == 4096);
  for (int k = 0; k < 4096; k += 97) CHECK(v[k] == big.at(k / 64, k % 64));
  CHECK_THROWS_AS(flatten_row_major(FrameTensor(2, 2, 3)), Error);
}

TEST_CASE("gaussian blur keeps constants and mass") {
  const FrameTensor c(12, 15, 1, 9.0f);
  const auto blurred = gaussian_blur(c, 1.7);
  for (float v : blurred.data()) CHECK(v == doctest::Approx(9.0).epsilon(1e-5));
  FrameTensor impulse(31, 31, 1);
  impulse.at(15, 15) = 1.0f;
  double sum = 0.0;
  const auto spread = gaussian_blur(impulse, 2.0);
  for (float v : spread.data()) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("bilinear sample interpolates and clamps") {
  FrameTensor f(2, 2, 1, std::vector<float>{0, 10, 20, 30});
  CHECK(sample_bilinear(f, 0.5f, 0.5f) == doctest::Approx(15.0));
  CHECK(sample_bilinear(f, 1.0f, 0.0f) == doctest::Approx(10.0));
  CHECK(sample_bilinear(f, -3.0f, -3.0f) == doctest::Approx(0.0));
  CHECK(sample_bilinear(f, 9.0f, 9.0f) == doctest::Approx(30.0));
}
