#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "motility/dataio.hpp"
#include "motility/tensor.hpp"

namespace motility::synth {

// Drifting dot field. A fraction of the dots never moves; the rest travel
// in straight lines (wrapping at the borders) at about `speed` px/frame.
struct DotVideoParams {
  int width = 128;
  int height = 128;
  int frames = 60;
  int dots = 30;
  double stationary_fraction = 0.5;
  double speed = 1.5;
  double dot_sigma = 1.5;
  double background = 20.0;
  double amplitude = 200.0;
  double noise = 2.0;
  std::uint64_t seed = 1;
};

std::vector<FrameTensor> dot_video(const DotVideoParams& params);

// immotile = 100 s, progressive = 100 (1 - s) (m - 0.5) / 2 with the speed
// clamped to [0.5, 2.5], non-progressive the remainder.
MotilityTargets dot_targets(double stationary_fraction, double speed);

struct DatasetParams {
  int videos = 40;
  int width = 128;
  int height = 128;
  int frames = 60;
  int dots = 30;
  std::uint64_t seed = 7;
};

// Writes <dir>/<id>.y8seq for every video plus <dir>/manifest.csv and
// returns the records. Stationary fraction ~ U[0.1, 0.9], speed ~ U[0.5, 2.5].
std::vector<VideoRecord> write_dot_dataset(const std::filesystem::path& dir, const DatasetParams& params);

// Long smooth-texture sequence drifting by a sub-pixel step per frame,
// streamed to a `.y8seq` file; used for throughput fixtures.
void write_drift_sequence(const std::filesystem::path& path, int width, int height, std::int64_t frames,
                          std::uint64_t seed);

}  // namespace motility::synth
