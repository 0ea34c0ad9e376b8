#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "motility/error.hpp"
#include "motility/represent.hpp"
#include "motility/synth.hpp"
#include "synthetic.hpp"

using namespace motility;
using namespace motility::represent;

namespace {

std::vector<FrameTensor> constant_video(int frames, float value, int channels = 3) {
  return std::vector<FrameTensor>(static_cast<std::size_t>(frames), FrameTensor(48, 64, channels, value));
}

SampleWindow window_at(std::int64_t start, std::int64_t length = kWindowLength) { return {"p", start, length}; }

bool has_shape(const FrameTensor& t, Shape s) {
  return t.height() == s[0] && t.width() == s[1] && t.channels() == s[2];
}

// Mean hue (degrees) of non-black pixels, weighted by value, via vector averaging.
double mean_hue(const FrameTensor& rgb) {
  double sx = 0, sy = 0;
  for (int y = 0; y < rgb.height(); ++y)
    for (int x = 0; x < rgb.width(); ++x) {
      const double r = rgb.at(y, x, 0), g = rgb.at(y, x, 1), b = rgb.at(y, x, 2);
      const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
      if (mx - mn < 1e-6) continue;
      double h;
      if (mx == r) h = 60.0 * std::fmod((g - b) / (mx - mn) + 6.0, 6.0);
      else if (mx == g) h = 60.0 * ((b - r) / (mx - mn) + 2.0);
      else h = 60.0 * ((r - g) / (mx - mn) + 4.0);
      sx += mx * std::cos(h * std::numbers::pi / 180.0);
      sy += mx * std::sin(h * std::numbers::pi / 180.0);
    }
  double h = std::atan2(sy, sx) * 180.0 / std::numbers::pi;
  return h < 0 ? h + 360.0 : h;
}

}  // namespace

TEST_CASE("representation names round-trip") {
  for (const char* n : {"single", "greystack", "vmatrix", "sparse", "dense", "two-stream-sparse",
                        "two-stream-dense", "two-stream-both"}) {
    CHECK(Representation::parse(n).name() == n);
  }
  CHECK_THROWS_AS(Representation::parse("optical"), Error);
  CHECK(Representation::parse("dense", 10).cache_name() == "dense-s10-sym");
  CHECK(Representation::parse("two-stream-both").motion_shape()->at(2) == 6);
}

TEST_CASE("single frame builder") {
  testutil::MemorySequence seq(constant_video(40, 51.0f));
  const auto t = build_single(window_at(3), seq);
  CHECK(has_shape(t, {224, 224, 3}));
  for (float v : t.data()) CHECK(v == doctest::Approx(51.0 / 127.5 - 1.0));

  const auto frames = testutil::drifting_texture(40, 56, 35, 0.5, 0.0, 1);
  testutil::MemorySequence moving(frames);
  CHECK(build_single(window_at(2), moving) == build_single(window_at(2, 30), moving));
}

TEST_CASE("greystack channels are greyscaled resized frames") {
  const auto frames = testutil::drifting_texture(40, 56, 35, 0.5, 0.25, 2);
  testutil::MemorySequence seq(frames);
  const auto stack = build_greystack(window_at(4), seq);
  CHECK(has_shape(stack, {224, 224, 30}));
  const auto ref = normalize(resize_bilinear(frames[4 + 7], 224, 224), NormalizeMode::Symmetric);
  CHECK(extract_channel(stack, 7) == ref);

  testutil::MemorySequence still(constant_video(30, 80.0f));
  const auto flat = build_greystack(window_at(0), still);
  for (int c = 1; c < 30; ++c) CHECK(extract_channel(flat, c) == extract_channel(flat, 0));
  CHECK_THROWS_AS(build_greystack(window_at(0, 29), still), Error);
}

TEST_CASE("vertical matrix rows are flattened 64x64 frames") {
  const auto frames = testutil::drifting_texture(40, 56, 35, 1.0, 0.0, 3);
  testutil::MemorySequence seq(frames);
  const auto m = build_vertical_matrix(window_at(5), seq);
  CHECK(has_shape(m, {30, 4096, 1}));
  const auto row0 = flatten_row_major(resize_bilinear(frames[5], 64, 64));
  for (int k = 0; k < 4096; ++k) CHECK(m.at(0, k) == doctest::Approx(row0[k] / 127.5 - 1.0));

  testutil::MemorySequence still(constant_video(30, 10.0f, 1));
  const auto s = build_vertical_matrix(window_at(0), still);
  for (int r = 1; r < 30; ++r)
    for (int k = 0; k < 4096; ++k) CHECK(s.at(r, k) == s.at(0, k));
}

TEST_CASE("dense flow of a static video is black") {
  const auto tex = testutil::random_texture(96, 96, 4);
  testutil::MemorySequence seq(std::vector<FrameTensor>(35, tex));
  const auto t = build_flow_rep(window_at(0), seq, FlowKind::Dense, 1, NormalizeMode::Unit);
  CHECK(has_shape(t, {224, 224, 3}));
  for (float v : t.data()) CHECK(v == 0.0f);
}

TEST_CASE("sparse flow of moving dots draws tracks") {
  synth::DotVideoParams p;
  p.frames = 30;
  p.stationary_fraction = 0.2;
  testutil::MemorySequence seq(synth::dot_video(p));
  const auto t = build_flow_rep(window_at(0), seq, FlowKind::Sparse, 1, NormalizeMode::Unit);
  CHECK(has_shape(t, {224, 224, 3}));
  int lit = 0;
  for (float v : t.data()) lit += v > 0.0f;
  CHECK(lit > 0);
}

TEST_CASE("dense stride scales flow but not the rendered direction") {
  const auto frames = testutil::drifting_texture(96, 96, 35, 0.2, 0.0, 5);
  testutil::MemorySequence seq(frames);
  const auto s1 = build_flow_rep(window_at(0), seq, FlowKind::Dense, 1, NormalizeMode::Unit);
  const auto s10 = build_flow_rep(window_at(0), seq, FlowKind::Dense, 10, NormalizeMode::Unit);
  const double h1 = mean_hue(s1), h10 = mean_hue(s10);
  const double dh = std::min(std::abs(h1 - h10), 360.0 - std::abs(h1 - h10));
  CHECK(dh < 5.0);
  CHECK(std::min(h1, 360.0 - h1) < 5.0);
  CHECK_THROWS_AS(build_flow_rep(window_at(5), seq, FlowKind::Dense, 30), Error);
}

TEST_CASE("two-stream pairs") {
  synth::DotVideoParams p;
  p.frames = 32;
  testutil::MemorySequence seq(synth::dot_video(p));
  const auto both = build_two_stream(window_at(1), seq, FlowKind::Both);
  CHECK(has_shape(both.first, {224, 224, 3}));
  CHECK(has_shape(both.second, {224, 224, 6}));
  CHECK(both.first == build_single(window_at(1), seq));
  const auto dense = build_two_stream(window_at(1), seq, FlowKind::Dense);
  CHECK(has_shape(dense.second, {224, 224, 3}));
}

TEST_CASE("participant vector z-scores with fold statistics") {
  std::vector<ParticipantFeatures> train{{30, 22, 3, 50.0}, {40, 26, 5, 70.0}, {35, 24, 4, std::nullopt}};
  const auto stats3 = compute_fold_stats(train, false);
  CHECK(stats3.mean.size() == 3);
  ParticipantFeatures at_mean{stats3.mean[0], stats3.mean[1], stats3.mean[2], {}};
  for (float v : participant_vector(at_mean, stats3)) CHECK(v == doctest::Approx(0.0).epsilon(1e-6));
  ParticipantFeatures older = at_mean;
  older.age += stats3.stddev[0];
  CHECK(participant_vector(older, stats3)[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(compute_fold_stats(train, true), Error);
  train.pop_back();
  const auto stats4 = compute_fold_stats(train, true);
  CHECK(participant_vector(train[0], stats4).size() == 4);
  ParticipantFeatures missing{30, 22, 3, std::nullopt};
  try {
    participant_vector(missing, stats4);
    FAIL("expected MissingConcentration");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingConcentration);
  }

  // constant feature maps to zero
  std::vector<ParticipantFeatures> same{{30, 22, 3, {}}, {30, 25, 3, {}}};
  const auto st = compute_fold_stats(same, false);
  CHECK(participant_vector({31, 22, 9, {}}, st)[0] == 0.0f);
}

TEST_CASE("fold statistics ignore validation participants") {
  std::vector<ParticipantFeatures> train{{30, 22, 3, {}}, {40, 26, 5, {}}, {50, 30, 2, {}}};
  const auto stats = compute_fold_stats(train, false);
  std::vector<std::vector<float>> before;
  for (const auto& f : train) before.push_back(participant_vector(f, stats));
  // permuting validation values cannot reach the training vectors: the stats only see `train`
  std::vector<ParticipantFeatures> validation{{20, 18, 1, {}}, {60, 35, 9, {}}};
  std::swap(validation[0], validation[1]);
  const auto again = compute_fold_stats(train, false);
  for (std::size_t i = 0; i < train.size(); ++i) CHECK(participant_vector(train[i], again) == before[i]);
}

TEST_CASE("video samples are cached and reloaded unchanged") {
  const auto dir = std::filesystem::temp_directory_path() / "motility_represent_cache_test";
  std::filesystem::remove_all(dir);
  synth::DatasetParams dp;
  dp.videos = 1;
  dp.frames = 40;
  dp.width = 64;
  dp.height = 64;
  const auto records = synth::write_dot_dataset(dir / "data", dp);
  const auto rep = Representation::parse("two-stream-dense");
  const auto windows = schedule_windows(records[0].frame_count, 3, 30, records[0].participant_id);
  const auto first = build_video_samples(records[0], rep, windows, dir / "cache");
  CHECK(std::filesystem::exists(cache_path(dir / "cache", records[0].participant_id, rep, 2)));
  const auto second = build_video_samples(records[0], rep, windows, dir / "cache");
  REQUIRE(first.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(first[i].input == second[i].input);
    CHECK(first[i].motion == second[i].motion);
    CHECK(second[i].targets == records[0].targets);
  }
  std::filesystem::remove_all(dir);
}
