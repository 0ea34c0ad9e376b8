#include "motility/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "motility/error.hpp"
#include "motility/simd/kernels.hpp"

namespace motility {

const char* normalize_mode_name(NormalizeMode mode) {
  return mode == NormalizeMode::Unit ? "unit" : "symmetric";
}

NormalizeMode parse_normalize_mode(const std::string& name) {
  if (name == "unit") return NormalizeMode::Unit;
  if (name == "symmetric") return NormalizeMode::Symmetric;
  throw Error(Errc::Usage, "unknown normalize mode '" + name + "'");
}

FrameTensor to_greyscale(const FrameTensor& frame) {
  if (frame.channels() != 3) {
    throw Error(Errc::WrongChannelCount,
                "to_greyscale expects 3 channels, got " + std::to_string(frame.channels()));
  }
  FrameTensor out(frame.height(), frame.width(), 1);
  simd::active().rgb_to_grey(frame.data().data(), out.data().data(),
                             static_cast<std::size_t>(frame.height()) * frame.width());
  return out;
}

FrameTensor ensure_greyscale(const FrameTensor& frame) {
  if (frame.channels() == 1) return frame;
  return to_greyscale(frame);
}

FrameTensor grey_to_rgb(const FrameTensor& frame) {
  if (frame.channels() != 1) {
    throw Error(Errc::WrongChannelCount, "grey_to_rgb expects 1 channel");
  }
  FrameTensor out(frame.height(), frame.width(), 3);
  auto src = frame.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  return out;
}

namespace {

struct Tap {
  int i0;
  int i1;
  float frac;
};

std::vector<Tap> resize_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double s = (i + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    taps[i] = {i0, std::min(i0 + 1, in - 1), static_cast<float>(s - i0)};
  }
  return taps;
}

}  // namespace

FrameTensor resize_bilinear(const FrameTensor& frame, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw Error(Errc::ShapeMismatch, "resize target must be >= 1x1");
  if (frame.empty()) throw Error(Errc::ShapeMismatch, "resize of an empty frame");
  if (out_h == frame.height() && out_w == frame.width()) return frame;
  const int channels = frame.channels();
  const auto xs = resize_taps(frame.width(), out_w);
  const auto ys = resize_taps(frame.height(), out_h);
  FrameTensor out(out_h, out_w, channels);
  for (int y = 0; y < out_h; ++y) {
    const Tap& ty = ys[y];
    for (int x = 0; x < out_w; ++x) {
      const Tap& tx = xs[x];
      for (int c = 0; c < channels; ++c) {
        // std::lerp is exact at the endpoints and monotone, so the output
        // never leaves the input range.
        const float top = std::lerp(frame.at(ty.i0, tx.i0, c), frame.at(ty.i0, tx.i1, c), tx.frac);
        const float bottom = std::lerp(frame.at(ty.i1, tx.i0, c), frame.at(ty.i1, tx.i1, c), tx.frac);
        out.at(y, x, c) = std::lerp(top, bottom, ty.frac);
      }
    }
  }
  return out;
}

FrameTensor normalize(const FrameTensor& frame, NormalizeMode mode) {
  FrameTensor out = frame;
  if (mode == NormalizeMode::Unit) {
    for (float& v : out.data()) v = v / 255.0f;
  } else {
    for (float& v : out.data()) v = v / 127.5f - 1.0f;
  }
  return out;
}

std::vector<float> flatten_row_major(const FrameTensor& frame) {
  if (frame.channels() != 1) {
    throw Error(Errc::WrongChannelCount, "flatten_row_major expects 1 channel");
  }
  return {frame.data().begin(), frame.data().end()};
}

FrameTensor gaussian_blur(const FrameTensor& frame, double sigma, int radius) {
  if (sigma <= 0.0) return frame;
  if (radius <= 0) radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    kernel[i + radius] = static_cast<float>(w);
    total += w;
  }
  for (float& w : kernel) w = static_cast<float>(w / total);

  const int h = frame.height();
  const int w = frame.width();
  const int channels = frame.channels();
  FrameTensor tmp(h, w, channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        float s = 0.0f;
        for (int k = -radius; k <= radius; ++k) {
          s += kernel[k + radius] * frame.at(y, std::clamp(x + k, 0, w - 1), c);
        }
        tmp.at(y, x, c) = s;
      }
    }
  }
  FrameTensor out(h, w, channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        float s = 0.0f;
        for (int k = -radius; k <= radius; ++k) {
          s += kernel[k + radius] * tmp.at(std::clamp(y + k, 0, h - 1), x, c);
        }
        out.at(y, x, c) = s;
      }
    }
  }
  return out;
}

float sample_bilinear(const FrameTensor& frame, float x, float y, int c) {
  const float cx = std::clamp(x, 0.0f, static_cast<float>(frame.width() - 1));
  const float cy = std::clamp(y, 0.0f, static_cast<float>(frame.height() - 1));
  const int x0 = static_cast<int>(cx);
  const int y0 = static_cast<int>(cy);
  const int x1 = std::min(x0 + 1, frame.width() - 1);
  const int y1 = std::min(y0 + 1, frame.height() - 1);
  const float fx = cx - x0;
  const float fy = cy - y0;
  const float top = frame.at(y0, x0, c) + fx * (frame.at(y0, x1, c) - frame.at(y0, x0, c));
  const float bottom = frame.at(y1, x0, c) + fx * (frame.at(y1, x1, c) - frame.at(y1, x0, c));
  return top + fy * (bottom - top);
}

}  // namespace motility
