#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "motility/tensor.hpp"

namespace motility::optflow {

struct Point2f {
  float x = 0.0f;
  float y = 0.0f;

  friend bool operator==(const Point2f&, const Point2f&) = default;
};

// One point sequence per seed. A track that is lost (singular gradient
// matrix or leaves the frame) stops at its last valid position and has
// valid == false.
struct Track {
  std::vector<Point2f> points;
  bool valid = true;
};

struct TrackSet {
  std::vector<Track> tracks;

  std::size_t size() const { return tracks.size(); }
  bool empty() const { return tracks.empty(); }
};

// Dense displacement field, u horizontal and v vertical, in pixels.
struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  FlowField(int h, int w) : height(h), width(w), u(static_cast<std::size_t>(h) * w, 0.0f), v(u) {}

  float& u_at(int y, int x) { return u[static_cast<std::size_t>(y) * width + x]; }
  float& v_at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
  float u_at(int y, int x) const { return u[static_cast<std::size_t>(y) * width + x]; }
  float v_at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }

  // H x W x 2 tensor (u, v), the flow cache layout.
  FrameTensor to_tensor() const;
  static FlowField from_tensor(const FrameTensor& tensor);
};

struct CornerParams {
  int max_corners = 200;
  double quality = 0.01;
  double min_distance = 7.0;
};

// Shi-Tomasi corners: minimum eigenvalue of the 3x3 box-summed structure
// tensor of 3x3 Sobel derivatives; local maxima at or above
// quality * max score; strongest first with greedy min_distance suppression.
std::vector<Point2f> good_features(const FrameTensor& frame, const CornerParams& params = {});

// Per-pixel Shi-Tomasi score, exposed for tests and diagnostics.
std::vector<float> min_eigen_map(const FrameTensor& frame);

struct LucasKanadeParams {
  int window = 21;        // square window side, odd
  int levels = 3;         // pyramid levels above the base image
  int iterations = 30;
  double epsilon = 0.01;  // stop when the update is shorter than this (pixels)
  double min_eigen = 1e-4;  // on the window-averaged gradient matrix
};

// Tracks every seed through consecutive frame pairs of `frames`, seeding
// once at frame 0. An empty seed list warns and yields an empty TrackSet.
TrackSet lucas_kanade_track(std::span<const FrameTensor> frames, std::span<const Point2f> seeds,
                            const LucasKanadeParams& params = {});

struct FarnebackParams {
  double pyr_scale = 0.5;
  int levels = 3;  // pyramid layers including the full-resolution image
  int winsize = 15;
  int iterations = 3;
  int poly_n = 5;  // half-width of the polynomial-expansion neighbourhood
  double poly_sigma = 1.2;
};

// Two-frame dense motion from frame_a to frame_b by quadratic polynomial
// expansion, coarse to fine. Throws FrameTooSmall when a side is below
// 2^levels * poly_n.
FlowField farneback_flow(const FrameTensor& frame_a, const FrameTensor& frame_b,
                         const FarnebackParams& params = {});

// Five-channel expansion (b_x, b_y, a_xx, a_yy, a_xy) of
// f ~ c + b^T p + a_xx x^2 + a_yy y^2 + a_xy x y, by Gaussian-weighted
// least squares. Exposed for tests.
FrameTensor polynomial_expansion(const FrameTensor& frame, int poly_n, double poly_sigma);

// HSV encoding: hue = direction, saturation 1, value = magnitude / max
// magnitude. RGB output in [0, 255].
FrameTensor render_dense(const FlowField& flow);

// Black canvas with one 1-pixel polyline per track, colored by track index
// modulo the 16-entry palette.
FrameTensor render_sparse(const TrackSet& tracks, int canvas_h, int canvas_w);

const std::array<std::array<float, 3>, 16>& track_palette();

}  // namespace motility::optflow
