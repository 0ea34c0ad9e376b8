#include "motility/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "motility/error.hpp"
#include "motility/imgproc.hpp"
#include "motility/rng.hpp"

namespace motility::synth {

namespace {

struct Dot {
  double x, y, dx, dy;
};

double wrap(double v, double period) {
  v = std::fmod(v, period);
  return v < 0.0 ? v + period : v;
}

void splat(FrameTensor& frame, double cx, double cy, double sigma, double amplitude) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  const int x0 = static_cast<int>(std::floor(cx));
  const int y0 = static_cast<int>(std::floor(cy));
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = y0 - r; y <= y0 + r + 1; ++y) {
    if (y < 0 || y >= frame.height()) continue;
    for (int x = x0 - r; x <= x0 + r + 1; ++x) {
      if (x < 0 || x >= frame.width()) continue;
      const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      frame.at(y, x) += static_cast<float>(amplitude * std::exp(-d2 * inv));
    }
  }
}

}  // namespace

std::vector<FrameTensor> dot_video(const DotVideoParams& p) {
  if (p.width < 16 || p.height < 16 || p.frames < 1 || p.dots < 0) {
    throw Error(Errc::Usage, "dot_video: invalid size");
  }
  Rng rng(p.seed);
  std::vector<Dot> dots(static_cast<std::size_t>(p.dots));
  const int still = static_cast<int>(std::lround(p.stationary_fraction * p.dots));
  for (int i = 0; i < p.dots; ++i) {
    Dot& d = dots[static_cast<std::size_t>(i)];
    d.x = rng.uniform(0.0, p.width);
    d.y = rng.uniform(0.0, p.height);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double speed = i < still ? 0.0 : p.speed * rng.uniform(0.8, 1.2);
    d.dx = speed * std::cos(angle);
    d.dy = speed * std::sin(angle);
  }
  std::vector<FrameTensor> frames;
  frames.reserve(static_cast<std::size_t>(p.frames));
  for (int t = 0; t < p.frames; ++t) {
    FrameTensor f(p.height, p.width, 1, static_cast<float>(p.background));
    for (const Dot& d : dots) {
      splat(f, wrap(d.x + t * d.dx, p.width), wrap(d.y + t * d.dy, p.height), p.dot_sigma, p.amplitude);
    }
    for (float& v : f.data()) {
      v = std::clamp(v + static_cast<float>(p.noise * rng.normal()), 0.0f, 255.0f);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

MotilityTargets dot_targets(double stationary_fraction, double speed) {
  const double s = std::clamp(stationary_fraction, 0.0, 1.0);
  const double q = (std::clamp(speed, 0.5, 2.5) - 0.5) / 2.0;
  MotilityTargets t;
  t.immotile = 100.0 * s;
  t.progressive = 100.0 * (1.0 - s) * q;
  t.nonprogressive = 100.0 - t.immotile - t.progressive;
  return t;
}

std::vector<VideoRecord> write_dot_dataset(const std::filesystem::path& dir, const DatasetParams& params) {
  if (params.videos < 1) throw Error(Errc::Usage, "write_dot_dataset: need at least one video");
  if (params.frames < 30) throw Error(Errc::VideoTooShort, "synthetic videos need at least 30 frames");
  std::filesystem::create_directories(dir);
  Rng rng(params.seed);
  std::vector<VideoRecord> records;
  for (int i = 0; i < params.videos; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth-%03d", i);
    DotVideoParams vp;
    vp.width = params.width;
    vp.height = params.height;
    vp.frames = params.frames;
    vp.dots = params.dots;
    vp.stationary_fraction = rng.uniform(0.1, 0.9);
    vp.speed = rng.uniform(0.5, 2.5);
    vp.seed = rng.next_u64();

    VideoRecord rec;
    rec.participant_id = id;
    rec.frame_source = std::string(id) + ".y8seq";
    rec.fps = 50.0;
    rec.frame_count = params.frames;
    rec.features.age = std::round(rng.uniform(20.0, 50.0));
    rec.features.bmi = std::round(rng.uniform(19.0, 35.0) * 10.0) / 10.0;
    rec.features.abstinence = std::round(rng.uniform(2.0, 7.0));
    rec.features.concentration = std::round(rng.uniform(10.0, 150.0) * 10.0) / 10.0;
    rec.targets = dot_targets(vp.stationary_fraction, vp.speed);

    write_y8seq(dir / rec.frame_source, dot_video(vp));
    records.push_back(rec);
  }
  write_manifest(dir / "manifest.csv", records);
  for (auto& r : records) r.frame_source = dir / r.frame_source;
  return records;
}

void write_drift_sequence(const std::filesystem::path& path, int width, int height, std::int64_t frames,
                          std::uint64_t seed) {
  Rng rng(seed);
  const int margin = 8;
  FrameTensor noise(height + 2 * margin, width + 2 * margin, 1);
  for (float& v : noise.data()) v = static_cast<float>(rng.uniform(0.0, 255.0));
  const FrameTensor texture = gaussian_blur(noise, 2.0);
  Y8SeqWriter writer(path, width, height);
  for (std::int64_t t = 0; t < frames; ++t) {
    // sub-pixel sinusoidal drift keeps the content inside the margin
    const float ox = static_cast<float>(margin + 4.0 * std::sin(0.01 * static_cast<double>(t)));
    const float oy = static_cast<float>(margin + 3.0 * std::cos(0.013 * static_cast<double>(t)));
    FrameTensor f(height, width, 1);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) f.at(y, x) = sample_bilinear(texture, ox + x, oy + y);
    writer.append(f);
  }
  writer.close();
}

}  // namespace motility::synth
