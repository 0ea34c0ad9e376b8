#include <cmath>
#include <numeric>

#include "doctest.h"
#include "motility/error.hpp"
#include "motility/log.hpp"
#include "motility/rng.hpp"
#include "motility/tamura.hpp"
#include "synthetic.hpp"
#include "tamura_oracle.hpp"

using namespace motility;
using namespace motility::tamura;

namespace {

FrameTensor random_u8(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  FrameTensor f(h, w, 1);
  for (float& v : f.data()) v = static_cast<float>(rng.below(256));
  return f;
}

FrameTensor checkerboard(int size, int block) {
  FrameTensor f(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) f.at(y, x) = ((y / block + x / block) % 2) ? 255.0f : 0.0f;
  return f;
}

FrameTensor stripes(int size, int width, bool diagonal) {
  FrameTensor f(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int u = diagonal ? x - y + 4 * size : x;
      f.at(y, x) = ((u / width) % 2) ? 255.0f : 0.0f;
    }
  return f;
}

FrameTensor rotate180(const FrameTensor& f) {
  FrameTensor out(f.height(), f.width(), 1);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) out.at(y, x) = f.at(f.height() - 1 - y, f.width() - 1 - x);
  return out;
}

FrameTensor mirror(const FrameTensor& f) {
  FrameTensor out(f.height(), f.width(), 1);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) out.at(y, x) = f.at(y, f.width() - 1 - x);
  return out;
}

int peak_bin(const std::vector<double>& h) {
  return static_cast<int>(std::max_element(h.begin(), h.end()) - h.begin());
}

}  // namespace

TEST_CASE("coarseness examples") {
  CHECK(coarseness(FrameTensor(64, 64, 1, 100.0f)) == 1.0);
  CHECK(coarseness(checkerboard(64, 2)) < coarseness(checkerboard(64, 8)));
  // Exact ties on a perfect checkerboard go to the smaller window, so edge
  // pixels score 1 and the mean lands below 8.
  const double c16 = coarseness(checkerboard(128, 16));
  CHECK(c16 == doctest::Approx(testutil::brute_coarseness(checkerboard(128, 16))).epsilon(1e-12));
  CHECK(c16 > coarseness(checkerboard(128, 2)));
  CHECK(c16 <= 16.0);
  CHECK_THROWS_AS(coarseness(FrameTensor(63, 64, 1)), Error);
  CHECK_THROWS_AS(coarseness(FrameTensor(64, 64, 3)), Error);
}

TEST_CASE("coarseness matches the brute-force definition") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = random_u8(64 + static_cast<int>(seed) * 3, 64 + static_cast<int>(seed) * 5, seed);
    CHECK(std::abs(coarseness(f) - testutil::brute_coarseness(f)) < 1e-6);
    const auto smooth = testutil::random_texture(70, 66, 50 + seed, 2.0);
    CHECK(std::abs(coarseness(smooth) - testutil::brute_coarseness(smooth)) < 1e-6);
  }
}

TEST_CASE("contrast examples") {
  CHECK(contrast(FrameTensor(10, 10, 1, 3.0f)) == 0.0);
  FrameTensor half(8, 8, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 4; x < 8; ++x) half.at(y, x) = 255.0f;
  CHECK(contrast(half) == doctest::Approx(127.5).epsilon(1e-12));
  const auto f = random_u8(32, 32, 4);
  FrameTensor twice = f;
  for (float& v : twice.data()) v *= 2.0f;
  CHECK(contrast(twice) == doctest::Approx(2.0 * contrast(f)).epsilon(1e-12));
  CHECK(contrast(f) == doctest::Approx(testutil::brute_contrast(f)).epsilon(1e-9));
}

TEST_CASE("directionality examples") {
  const auto vertical = directionality(stripes(64, 4, false));
  CHECK(vertical[8] >= 0.9);
  CHECK(std::accumulate(vertical.begin(), vertical.end(), 0.0) == doctest::Approx(1.0));

  const auto flat = directionality(FrameTensor(16, 16, 1, 80.0f));
  for (double v : flat) CHECK(v == 0.0);

  // Bin containing pi/4 is 4 (bins of width pi/16); one bin of slack.
  const int diag = peak_bin(directionality(stripes(64, 4, true)));
  CHECK(std::abs(diag - 4) <= 1);

  const auto thin = directionality(stripes(64, 1, false));
  for (double v : thin) CHECK(v == 0.0);
}

TEST_CASE("directionality matches the brute-force definition") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = random_u8(40, 50, 10 + seed);
    const auto a = directionality(f);
    const auto b = testutil::brute_directionality(f);
    for (int i = 0; i < kDirectionBins; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
  }
}

TEST_CASE("flips") {
  const auto f = testutil::random_texture(80, 72, 77, 2.0);
  const auto r = rotate180(f);
  // The single-pixel scale sits on a pixel row while the even windows sit
  // between rows, so a half turn moves them differently: near, not equal.
  CHECK(coarseness(r) == doctest::Approx(testutil::brute_coarseness(r)).epsilon(1e-12));
  CHECK(coarseness(r) == doctest::Approx(coarseness(f)).epsilon(1e-2));
  CHECK(contrast(r) == doctest::Approx(contrast(f)).epsilon(1e-12));
  const auto d = directionality(f);
  const auto dr = directionality(r);
  for (int i = 0; i < kDirectionBins; ++i) CHECK(dr[i] == doctest::Approx(d[i]).epsilon(1e-12));
  const auto dm = directionality(mirror(f));
  for (int i = 0; i < kDirectionBins; ++i) CHECK(dm[kDirectionBins - 1 - i] == doctest::Approx(d[i]).epsilon(1e-12));
}

TEST_CASE("descriptor layout and invariants") {
  const auto f = testutil::random_texture(64, 64, 3);
  const auto d = describe(f);
  const auto s = d.serialize();
  CHECK(s.size() == 18);
  CHECK(s[0] == static_cast<float>(d.coarseness));
  CHECK(s[1] == static_cast<float>(d.contrast));
  CHECK(d.coarseness >= 1.0);
  CHECK(d.contrast >= 0.0);
  double mass = 0.0;
  for (int b = 0; b < kDirectionBins; ++b) {
    CHECK(d.directionality[b] >= 0.0);
    mass += d.directionality[b];
  }
  CHECK(mass == doctest::Approx(1.0));
  CHECK(describe(f).serialize() == s);
}

TEST_CASE("video feature vector") {
  const FrameTensor frame = testutil::random_texture(64, 64, 8);
  const auto one = describe(frame).serialize();

  testutil::MemorySequence full(std::vector<FrameTensor>(3000, frame));
  const auto v = video_feature_vector(full, 50.0);
  REQUIRE(v.size() == 2160);
  for (int i = 0; i < 120; ++i)
    for (int j = 0; j < 18; ++j) CHECK(v[i * 18 + j] == one[j]);

  WarningCapture capture;
  testutil::MemorySequence half(std::vector<FrameTensor>(1500, frame));
  const auto w = video_feature_vector(half, 50.0);
  REQUIRE(w.size() == 2160);
  CHECK(capture.count() == 1);
  for (int i = 0; i < 1080; ++i) CHECK(w[i] == one[i % 18]);
  for (int i = 1080; i < 2160; ++i) CHECK(w[i] == 0.0f);
}
