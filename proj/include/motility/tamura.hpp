#pragma once

#include <array>
#include <vector>

#include "motility/dataio.hpp"
#include "motility/tensor.hpp"

namespace motility::tamura {

inline constexpr int kDirectionBins = 16;
inline constexpr int kDescriptorSize = 2 + kDirectionBins;  // 18
inline constexpr int kFramesPerVideo = 120;
inline constexpr int kVideoFeatureSize = kDescriptorSize * kFramesPerVideo;  // 2160

// Window sizes 2^k for k in [0, kMaxScale].
inline constexpr int kMaxScale = 4;
inline constexpr double kDefaultEdgeThreshold = 12.0;

struct Descriptor {
  double coarseness = 1.0;
  double contrast = 0.0;
  std::array<double, kDirectionBins> directionality{};

  // [coarseness, contrast, bin_0 .. bin_15]
  std::array<float, kDescriptorSize> serialize() const;
};

// Mean best window size over pixels whose windows all fit. For scale k with
// s = 2^k, the horizontal difference at (x, y) compares the s x s window
// covering columns [x, x + s) with the one covering [x - s, x), both spanning
// rows [y - s/2, y - s/2 + s); the vertical difference is the transpose. The
// best scale maximises max(E_h, E_v), ties going to the smaller k.
// Requires a single-channel frame of at least 64 x 64 (FrameTooSmall).
double coarseness(const FrameTensor& frame);

// sigma / kurtosis^(1/4); 0 for a flat image.
double contrast(const FrameTensor& frame);

// Histogram of Prewitt gradient orientations theta = atan(dV / dH) + pi/2 in
// [0, pi) over interior pixels with (|dH| + |dV|) / 2 >= edge_threshold,
// normalised to sum 1 (all zero without votes).
std::vector<double> directionality(const FrameTensor& frame, int bins = kDirectionBins,
                                   double edge_threshold = kDefaultEdgeThreshold);

Descriptor describe(const FrameTensor& grey_frame);

// 120 frames (two per second, first minute), greyscaled, 18 values each,
// concatenated in index order. Frames past the end of the video are zero
// padded with a warning.
std::vector<float> video_feature_vector(FrameSequence& frames, double fps);
std::vector<float> video_feature_vector(const VideoRecord& record);

}  // namespace motility::tamura
