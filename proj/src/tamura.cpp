#include "motility/tamura.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "motility/error.hpp"
#include "motility/imgproc.hpp"
#include "motility/log.hpp"

namespace motility::tamura {

std::array<float, kDescriptorSize> Descriptor::serialize() const {
  std::array<float, kDescriptorSize> out{};
  out[0] = static_cast<float>(coarseness);
  out[1] = static_cast<float>(contrast);
  for (int b = 0; b < kDirectionBins; ++b) out[2 + b] = static_cast<float>(directionality[b]);
  return out;
}

namespace {

void require_grey(const FrameTensor& frame, const char* who) {
  if (frame.channels() != 1) {
    throw Error(Errc::WrongChannelCount, std::string(who) + " expects a single-channel frame");
  }
}

// Summed-area table with a zero guard row/column.
class IntegralImage {
 public:
  explicit IntegralImage(const FrameTensor& frame)
      : width_(frame.width() + 1), table_(static_cast<std::size_t>(frame.height() + 1) * width_, 0.0) {
    for (int y = 0; y < frame.height(); ++y) {
      double row = 0.0;
      for (int x = 0; x < frame.width(); ++x) {
        row += frame.at(y, x);
        at(y + 1, x + 1) = at(y, x + 1) + row;
      }
    }
  }

  // Sum over rows [y0, y0 + h) and columns [x0, x0 + w).
  double box(int y0, int x0, int h, int w) const {
    return at(y0 + h, x0 + w) - at(y0, x0 + w) - at(y0 + h, x0) + at(y0, x0);
  }

 private:
  double& at(int y, int x) { return table_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int y, int x) const { return table_[static_cast<std::size_t>(y) * width_ + x]; }

  int width_;
  std::vector<double> table_;
};

}  // namespace

double coarseness(const FrameTensor& frame) {
  require_grey(frame, "coarseness");
  if (frame.height() < 64 || frame.width() < 64) {
    throw Error(Errc::FrameTooSmall, "coarseness needs at least 64x64, got " +
                                         std::to_string(frame.width()) + "x" +
                                         std::to_string(frame.height()));
  }
  const IntegralImage integral(frame);
  constexpr int margin = 1 << kMaxScale;
  const int h = frame.height();
  const int w = frame.width();
  double total = 0.0;
  std::size_t count = 0;
  for (int y = margin; y <= h - margin; ++y) {
    for (int x = margin; x <= w - margin; ++x) {
      double best = -1.0;
      int best_size = 1;
      for (int k = 0; k <= kMaxScale; ++k) {
        const int s = 1 << k;
        const int lo = s / 2;
        const double area = static_cast<double>(s) * s;
        const double eh = std::abs(integral.box(y - lo, x, s, s) - integral.box(y - lo, x - s, s, s)) / area;
        const double ev = std::abs(integral.box(y, x - lo, s, s) - integral.box(y - s, x - lo, s, s)) / area;
        const double e = std::max(eh, ev);
        if (e > best) {
          best = e;
          best_size = s;
        }
      }
      total += best_size;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double contrast(const FrameTensor& frame) {
  if (frame.empty()) throw Error(Errc::ShapeMismatch, "contrast of an empty frame");
  const auto values = frame.data();
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (float v : values) mean += v;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (float v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  const double sigma = std::sqrt(m2);
  if (sigma < 1e-9) return 0.0;
  const double kurtosis = m4 / (m2 * m2);
  return sigma / std::pow(kurtosis, 0.25);
}

std::vector<double> directionality(const FrameTensor& frame, int bins, double edge_threshold) {
  require_grey(frame, "directionality");
  if (bins < 1) throw Error(Errc::Usage, "directionality needs at least one bin");
  std::vector<double> histogram(static_cast<std::size_t>(bins), 0.0);
  const int h = frame.height();
  const int w = frame.width();
  if (h < 3 || w < 3) throw Error(Errc::FrameTooSmall, "directionality needs at least 3x3");

  // Prewitt as separable passes: vertical column sums feed the horizontal
  // difference, horizontal row sums feed the vertical difference.
  std::vector<double> col_sum(static_cast<std::size_t>(w));
  std::vector<double> row_sum_up(static_cast<std::size_t>(w));
  std::vector<double> row_sum_down(static_cast<std::size_t>(w));
  double votes = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 0; x < w; ++x) {
      col_sum[x] = static_cast<double>(frame.at(y - 1, x)) + frame.at(y, x) + frame.at(y + 1, x);
    }
    for (int x = 1; x < w - 1; ++x) {
      row_sum_up[x] = static_cast<double>(frame.at(y - 1, x - 1)) + frame.at(y - 1, x) + frame.at(y - 1, x + 1);
      row_sum_down[x] = static_cast<double>(frame.at(y + 1, x - 1)) + frame.at(y + 1, x) + frame.at(y + 1, x + 1);
    }
    for (int x = 1; x < w - 1; ++x) {
      const double dh = col_sum[x + 1] - col_sum[x - 1];
      const double dv = row_sum_down[x] - row_sum_up[x];
      const double magnitude = (std::abs(dh) + std::abs(dv)) / 2.0;
      if (magnitude < edge_threshold) continue;
      double theta = std::atan2(dv, dh) + std::numbers::pi / 2.0;
      if (theta >= std::numbers::pi) theta -= std::numbers::pi;
      if (theta < 0.0) theta += std::numbers::pi;
      int bin = static_cast<int>(std::floor(theta * bins / std::numbers::pi));
      bin = std::clamp(bin, 0, bins - 1);
      histogram[bin] += 1.0;
      votes += 1.0;
    }
  }
  if (votes > 0.0) {
    for (double& v : histogram) v /= votes;
  }
  return histogram;
}

Descriptor describe(const FrameTensor& grey_frame) {
  Descriptor d;
  d.coarseness = coarseness(grey_frame);
  d.contrast = contrast(grey_frame);
  const auto hist = directionality(grey_frame, kDirectionBins, kDefaultEdgeThreshold);
  std::copy(hist.begin(), hist.end(), d.directionality.begin());
  return d;
}

std::vector<float> video_feature_vector(FrameSequence& frames, double fps) {
  const auto indices = classical_frame_indices(fps, kFramesPerVideo / 2);
  std::vector<float> features(kVideoFeatureSize, 0.0f);
  int missing = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= frames.frame_count()) {
      ++missing;
      continue;
    }
    const FrameTensor grey = ensure_greyscale(frames.read(indices[i]));
    const auto values = describe(grey).serialize();
    std::copy(values.begin(), values.end(), features.begin() + static_cast<std::ptrdiff_t>(i * kDescriptorSize));
  }
  if (missing > 0) {
    warn("video has " + std::to_string(frames.frame_count()) + " frames; " +
         std::to_string(missing) + " of " + std::to_string(indices.size()) +
         " Tamura frames lie past the end and are zero padded");
  }
  return features;
}

std::vector<float> video_feature_vector(const VideoRecord& record) {
  auto frames = open_frames(record);
  try {
    return video_feature_vector(*frames, record.fps);
  } catch (const Error& e) {
    throw Error(e.code(), "participant " + record.participant_id + ": " + e.detail());
  }
}

}  // namespace motility::tamura
