#include "motility/optflow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "motility/error.hpp"
#include "motility/imgproc.hpp"
#include "motility/log.hpp"
#include "motility/parallel.hpp"

namespace motility::optflow {

FrameTensor FlowField::to_tensor() const {
  FrameTensor t(height, width, 2);
  for (std::size_t i = 0; i < u.size(); ++i) {
    t.data()[2 * i] = u[i];
    t.data()[2 * i + 1] = v[i];
  }
  return t;
}

FlowField FlowField::from_tensor(const FrameTensor& tensor) {
  if (tensor.channels() != 2) throw Error(Errc::ShapeMismatch, "flow tensor needs 2 channels");
  FlowField f(tensor.height(), tensor.width());
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    f.u[i] = tensor.data()[2 * i];
    f.v[i] = tensor.data()[2 * i + 1];
  }
  return f;
}

namespace {

void require_grey(const FrameTensor& frame, const char* who) {
  if (frame.channels() != 1) {
    throw Error(Errc::WrongChannelCount, std::string(who) + " expects a single-channel frame");
  }
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// 5-tap [1 4 6 4 1] / 16 smoothing followed by 2x decimation.
FrameTensor pyr_down(const FrameTensor& src) {
  static constexpr float k[5] = {1.0f / 16, 4.0f / 16, 6.0f / 16, 4.0f / 16, 1.0f / 16};
  const int h = src.height();
  const int w = src.width();
  const int oh = (h + 1) / 2;
  const int ow = (w + 1) / 2;
  FrameTensor rows(h, ow, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      float s = 0.0f;
      for (int t = -2; t <= 2; ++t) s += k[t + 2] * src.at(y, clampi(2 * x + t, 0, w - 1));
      rows.at(y, x) = s;
    }
  }
  FrameTensor out(oh, ow, 1);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      float s = 0.0f;
      for (int t = -2; t <= 2; ++t) s += k[t + 2] * rows.at(clampi(2 * y + t, 0, h - 1), x);
      out.at(y, x) = s;
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Shi-Tomasi

std::vector<float> min_eigen_map(const FrameTensor& frame) {
  require_grey(frame, "min_eigen_map");
  const int h = frame.height();
  const int w = frame.width();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<float> ixx(n), ixy(n), iyy(n);
  auto px = [&](int y, int x) { return frame.at(clampi(y, 0, h - 1), clampi(x, 0, w - 1)); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float gx = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1)) -
                       (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1));
      const float gy = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1)) -
                       (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      ixx[i] = gx * gx;
      ixy[i] = gx * gy;
      iyy[i] = gy * gy;
    }
  }
  std::vector<float> score(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double a = 0.0, b = 0.0, c = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const std::size_t j = static_cast<std::size_t>(clampi(y + dy, 0, h - 1)) * w + clampi(x + dx, 0, w - 1);
          a += ixx[j];
          b += ixy[j];
          c += iyy[j];
        }
      }
      const double half_trace = 0.5 * (a + c);
      const double diff = 0.5 * (a - c);
      score[static_cast<std::size_t>(y) * w + x] =
          static_cast<float>(std::max(0.0, half_trace - std::sqrt(diff * diff + b * b)));
    }
  }
  return score;
}

std::vector<Point2f> good_features(const FrameTensor& frame, const CornerParams& params) {
  require_grey(frame, "good_features");
  const int h = frame.height();
  const int w = frame.width();
  if (h < 16 || w < 16) throw Error(Errc::FrameTooSmall, "good_features needs at least 16x16");
  const auto score = min_eigen_map(frame);
  const float max_score = *std::max_element(score.begin(), score.end());
  if (!(max_score > 0.0f)) return {};
  const float threshold = static_cast<float>(params.quality) * max_score;

  struct Candidate {
    float score;
    int index;
  };
  std::vector<Candidate> candidates;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float s = score[static_cast<std::size_t>(y) * w + x];
      if (s < threshold || s <= 0.0f) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy;
          const int xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          if (score[static_cast<std::size_t>(yy) * w + xx] > s) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({s, y * w + x});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  std::vector<Point2f> corners;
  const double min_d2 = params.min_distance * params.min_distance;
  for (const auto& c : candidates) {
    if (static_cast<int>(corners.size()) >= params.max_corners) break;
    const Point2f p{static_cast<float>(c.index % w), static_cast<float>(c.index / w)};
    bool far_enough = true;
    for (const auto& q : corners) {
      const double dx = p.x - q.x;
      const double dy = p.y - q.y;
      if (dx * dx + dy * dy < min_d2) {
        far_enough = false;
        break;
      }
    }
    if (far_enough) corners.push_back(p);
  }
  return corners;
}

// ---------------------------------------------------------------------------
// Pyramidal Lucas-Kanade

namespace {

struct LkLevel {
  FrameTensor image;
  FrameTensor grad_x;
  FrameTensor grad_y;
};

// Scharr derivatives normalised to intensity per pixel.
void scharr(const FrameTensor& img, FrameTensor& gx, FrameTensor& gy) {
  const int h = img.height();
  const int w = img.width();
  gx = FrameTensor(h, w, 1);
  gy = FrameTensor(h, w, 1);
  auto px = [&](int y, int x) { return img.at(clampi(y, 0, h - 1), clampi(x, 0, w - 1)); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      gx.at(y, x) = (3.0f * (px(y - 1, x + 1) - px(y - 1, x - 1)) + 10.0f * (px(y, x + 1) - px(y, x - 1)) +
                     3.0f * (px(y + 1, x + 1) - px(y + 1, x - 1))) / 32.0f;
      gy.at(y, x) = (3.0f * (px(y + 1, x - 1) - px(y - 1, x - 1)) + 10.0f * (px(y + 1, x) - px(y - 1, x)) +
                     3.0f * (px(y + 1, x + 1) - px(y - 1, x + 1))) / 32.0f;
    }
  }
}

std::vector<LkLevel> build_lk_pyramid(const FrameTensor& frame, int levels) {
  std::vector<LkLevel> pyramid;
  pyramid.reserve(static_cast<std::size_t>(levels) + 1);
  FrameTensor current = frame;
  for (int level = 0; level <= levels; ++level) {
    LkLevel l;
    l.image = current;
    scharr(l.image, l.grad_x, l.grad_y);
    pyramid.push_back(std::move(l));
    if (level < levels) {
      if (current.width() < 8 || current.height() < 8) break;
      current = pyr_down(current);
    }
  }
  return pyramid;
}

std::optional<Point2f> track_point(const std::vector<LkLevel>& from, const std::vector<LkLevel>& to,
                                   Point2f p, const LucasKanadeParams& params) {
  const int half = params.window / 2;
  const int side = 2 * half + 1;
  const std::size_t count = static_cast<std::size_t>(side) * side;
  std::vector<float> tmpl(count), tgx(count), tgy(count);
  double gx_acc = 0.0, gy_acc = 0.0;  // accumulated displacement in current-level pixels
  const int top = static_cast<int>(std::min(from.size(), to.size())) - 1;
  for (int level = top; level >= 0; --level) {
    const float scale = 1.0f / static_cast<float>(1 << level);
    const float px = p.x * scale;
    const float py = p.y * scale;
    const LkLevel& a = from[static_cast<std::size_t>(level)];
    const LkLevel& b = to[static_cast<std::size_t>(level)];

    double g11 = 0.0, g12 = 0.0, g22 = 0.0;
    std::size_t k = 0;
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx, ++k) {
        const float x = px + dx;
        const float y = py + dy;
        tmpl[k] = sample_bilinear(a.image, x, y);
        tgx[k] = sample_bilinear(a.grad_x, x, y);
        tgy[k] = sample_bilinear(a.grad_y, x, y);
        g11 += static_cast<double>(tgx[k]) * tgx[k];
        g12 += static_cast<double>(tgx[k]) * tgy[k];
        g22 += static_cast<double>(tgy[k]) * tgy[k];
      }
    }
    const double min_eig =
        (0.5 * (g11 + g22) - std::sqrt(0.25 * (g11 - g22) * (g11 - g22) + g12 * g12)) /
        static_cast<double>(count);
    const double det = g11 * g22 - g12 * g12;
    double nu_x = 0.0, nu_y = 0.0;
    if (min_eig < params.min_eigen || det <= 0.0) {
      if (level == 0) return std::nullopt;
    } else {
      for (int it = 0; it < params.iterations; ++it) {
        double bx = 0.0, by = 0.0;
        k = 0;
        const float ox = static_cast<float>(px + gx_acc + nu_x);
        const float oy = static_cast<float>(py + gy_acc + nu_y);
        for (int dy = -half; dy <= half; ++dy) {
          for (int dx = -half; dx <= half; ++dx, ++k) {
            const double diff = tmpl[k] - sample_bilinear(b.image, ox + dx, oy + dy);
            bx += diff * tgx[k];
            by += diff * tgy[k];
          }
        }
        const double ex = (g22 * bx - g12 * by) / det;
        const double ey = (g11 * by - g12 * bx) / det;
        nu_x += ex;
        nu_y += ey;
        if (ex * ex + ey * ey < params.epsilon * params.epsilon) break;
      }
    }
    if (level > 0) {
      gx_acc = 2.0 * (gx_acc + nu_x);
      gy_acc = 2.0 * (gy_acc + nu_y);
    } else {
      gx_acc += nu_x;
      gy_acc += nu_y;
    }
  }
  const Point2f next{static_cast<float>(p.x + gx_acc), static_cast<float>(p.y + gy_acc)};
  const auto& base = to.front().image;
  if (!std::isfinite(next.x) || !std::isfinite(next.y) || next.x < 0.0f || next.y < 0.0f ||
      next.x > static_cast<float>(base.width() - 1) || next.y > static_cast<float>(base.height() - 1)) {
    return std::nullopt;
  }
  return next;
}

}  // namespace

TrackSet lucas_kanade_track(std::span<const FrameTensor> frames, std::span<const Point2f> seeds,
                            const LucasKanadeParams& params) {
  TrackSet result;
  if (seeds.empty()) {
    warn("lucas_kanade_track: empty seed list");
    return result;
  }
  if (frames.empty()) return result;
  for (const auto& f : frames) {
    require_grey(f, "lucas_kanade_track");
    if (f.height() != frames[0].height() || f.width() != frames[0].width()) {
      throw Error(Errc::InconsistentDimensions, "lucas_kanade_track: frames differ in size");
    }
  }
  if (params.window < 3 || params.window % 2 == 0) {
    throw Error(Errc::Usage, "lucas_kanade_track: window must be odd and >= 3");
  }
  std::vector<std::vector<LkLevel>> pyramids(frames.size());
  parallel_for(frames.size(), [&](std::size_t i) { pyramids[i] = build_lk_pyramid(frames[i], params.levels); });

  const float max_x = static_cast<float>(frames[0].width() - 1);
  const float max_y = static_cast<float>(frames[0].height() - 1);
  result.tracks.resize(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t s) {
    Track& track = result.tracks[s];
    Point2f p = seeds[s];
    if (p.x < 0.0f || p.y < 0.0f || p.x > max_x || p.y > max_y) {
      track.valid = false;
      return;
    }
    track.points.push_back(p);
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
      const auto next = track_point(pyramids[t], pyramids[t + 1], p, params);
      if (!next) {
        track.valid = false;
        break;
      }
      p = *next;
      track.points.push_back(p);
    }
  });
  return result;
}

// ---------------------------------------------------------------------------
// Farneback

namespace {

constexpr int kChannels = 5;

// Inverse of the 3x3 block of the normal equations coupling c, a_xx, a_yy.
struct ExpansionBasis {
  std::vector<float> g, xg, xxg;  // index t + n
  double inv_x;     // 1 / (s0 s2) for b_x, b_y
  double inv_xy;    // 1 / s2^2 for a_xy
  double q[3][3];   // inverse of [[s0^2, s0 s2, s0 s2], [s0 s2, s0 s4, s2^2], [s0 s2, s2^2, s0 s4]]
};

ExpansionBasis make_basis(int n, double sigma) {
  ExpansionBasis basis;
  basis.g.resize(2 * n + 1);
  basis.xg.resize(2 * n + 1);
  basis.xxg.resize(2 * n + 1);
  double total = 0.0;
  std::vector<double> g(2 * n + 1);
  for (int t = -n; t <= n; ++t) {
    g[t + n] = std::exp(-(t * t) / (2.0 * sigma * sigma));
    total += g[t + n];
  }
  double s0 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int t = -n; t <= n; ++t) {
    const double gt = g[t + n] / total;
    basis.g[t + n] = static_cast<float>(gt);
    basis.xg[t + n] = static_cast<float>(t * gt);
    basis.xxg[t + n] = static_cast<float>(t * t * gt);
    s0 += gt;
    s2 += t * t * gt;
    s4 += t * t * t * t * gt;
  }
  basis.inv_x = 1.0 / (s0 * s2);
  basis.inv_xy = 1.0 / (s2 * s2);
  const double m[3][3] = {{s0 * s0, s0 * s2, s0 * s2}, {s0 * s2, s0 * s4, s2 * s2}, {s0 * s2, s2 * s2, s0 * s4}};
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      basis.q[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
    }
  }
  return basis;
}

void box_blur_channels(FrameTensor& m, int winsize) {
  const int h = m.height();
  const int w = m.width();
  const int c = m.channels();
  const int r = winsize / 2;
  const float inv = 1.0f / static_cast<float>((2 * r + 1) * (2 * r + 1));
  FrameTensor tmp(h, w, c);
  std::vector<double> acc(static_cast<std::size_t>(c));
  for (int y = 0; y < h; ++y) {
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (int t = -r; t <= r; ++t) s += m.at(y, clampi(t, 0, w - 1), ch);
      for (int x = 0; x < w; ++x) {
        tmp.at(y, x, ch) = static_cast<float>(s);
        s += m.at(y, clampi(x + r + 1, 0, w - 1), ch) - m.at(y, clampi(x - r, 0, w - 1), ch);
      }
    }
  }
  for (int x = 0; x < w; ++x) {
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (int t = -r; t <= r; ++t) s += tmp.at(clampi(t, 0, h - 1), x, ch);
      for (int y = 0; y < h; ++y) {
        m.at(y, x, ch) = static_cast<float>(s) * inv;
        s += tmp.at(clampi(y + r + 1, 0, h - 1), x, ch) - tmp.at(clampi(y - r, 0, h - 1), x, ch);
      }
    }
  }
}

// Per pixel G = A^T A and h = A^T db (5 channels: Gxx, Gxy, Gyy, hx, hy)
// for the current displacement estimate.
FrameTensor update_matrices(const FrameTensor& r0, const FrameTensor& r1, const FlowField& flow) {
  static constexpr float kBorder[5] = {0.14f, 0.14f, 0.4472f, 0.4472f, 0.4472f};
  const int h = r0.height();
  const int w = r0.width();
  FrameTensor m(h, w, kChannels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float u = flow.u_at(y, x);
      const float v = flow.v_at(y, x);
      const float fx = x + u;
      const float fy = y + v;
      const int x1 = static_cast<int>(std::floor(fx));
      const int y1 = static_cast<int>(std::floor(fy));
      float b2x = 0.0f, b2y = 0.0f;
      float axx = r0.at(y, x, 2), ayy = r0.at(y, x, 3), axy = 0.5f * r0.at(y, x, 4);
      if (x1 >= 0 && y1 >= 0 && x1 < w - 1 && y1 < h - 1) {
        const float ax = fx - x1;
        const float ay = fy - y1;
        const float w00 = (1 - ax) * (1 - ay), w01 = ax * (1 - ay), w10 = (1 - ax) * ay, w11 = ax * ay;
        float s[kChannels];
        for (int c = 0; c < kChannels; ++c) {
          s[c] = w00 * r1.at(y1, x1, c) + w01 * r1.at(y1, x1 + 1, c) + w10 * r1.at(y1 + 1, x1, c) +
                 w11 * r1.at(y1 + 1, x1 + 1, c);
        }
        b2x = s[0];
        b2y = s[1];
        axx = 0.5f * (axx + s[2]);
        ayy = 0.5f * (ayy + s[3]);
        axy = 0.5f * (axy + 0.5f * s[4]);
      } else {
        b2x = r0.at(y, x, 0);
        b2y = r0.at(y, x, 1);
      }
      float dbx = 0.5f * (r0.at(y, x, 0) - b2x) + axx * u + axy * v;
      float dby = 0.5f * (r0.at(y, x, 1) - b2y) + axy * u + ayy * v;
      const int edge = std::min(std::min(x, w - 1 - x), std::min(y, h - 1 - y));
      if (edge < 5) {
        const float scale = kBorder[edge];
        dbx *= scale;
        dby *= scale;
        axx *= scale;
        ayy *= scale;
        axy *= scale;
      }
      m.at(y, x, 0) = axx * axx + axy * axy;
      m.at(y, x, 1) = axy * (axx + ayy);
      m.at(y, x, 2) = ayy * ayy + axy * axy;
      m.at(y, x, 3) = axx * dbx + axy * dby;
      m.at(y, x, 4) = axy * dbx + ayy * dby;
    }
  }
  return m;
}

void solve_flow(const FrameTensor& m, FlowField& flow) {
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const double gxx = m.at(y, x, 0), gxy = m.at(y, x, 1), gyy = m.at(y, x, 2);
      const double hx = m.at(y, x, 3), hy = m.at(y, x, 4);
      const double idet = 1.0 / (gxx * gyy - gxy * gxy + 1e-3);
      flow.u_at(y, x) = static_cast<float>((gyy * hx - gxy * hy) * idet);
      flow.v_at(y, x) = static_cast<float>((gxx * hy - gxy * hx) * idet);
    }
  }
}

FlowField resize_flow(const FlowField& flow, int h, int w, float factor) {
  FrameTensor t = resize_bilinear(flow.to_tensor(), h, w);
  for (float& value : t.data()) value *= factor;
  return FlowField::from_tensor(t);
}

}  // namespace

FrameTensor polynomial_expansion(const FrameTensor& frame, int poly_n, double poly_sigma) {
  require_grey(frame, "polynomial_expansion");
  const ExpansionBasis basis = make_basis(poly_n, poly_sigma);
  const int h = frame.height();
  const int w = frame.width();
  const int n = poly_n;
  // Vertical pass: moments of order 0, 1, 2 in y.
  FrameTensor vert(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float m0 = 0.0f, m1 = 0.0f, m2 = 0.0f;
      for (int t = -n; t <= n; ++t) {
        const float f = frame.at(clampi(y + t, 0, h - 1), x);
        m0 += basis.g[t + n] * f;
        m1 += basis.xg[t + n] * f;
        m2 += basis.xxg[t + n] * f;
      }
      vert.at(y, x, 0) = m0;
      vert.at(y, x, 1) = m1;
      vert.at(y, x, 2) = m2;
    }
  }
  FrameTensor out(h, w, kChannels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double b1 = 0, bx = 0, bxx = 0, by = 0, byy = 0, bxy = 0;
      for (int t = -n; t <= n; ++t) {
        const int xx = clampi(x + t, 0, w - 1);
        const double v0 = vert.at(y, xx, 0), v1 = vert.at(y, xx, 1), v2 = vert.at(y, xx, 2);
        b1 += basis.g[t + n] * v0;
        bx += basis.xg[t + n] * v0;
        bxx += basis.xxg[t + n] * v0;
        by += basis.g[t + n] * v1;
        bxy += basis.xg[t + n] * v1;
        byy += basis.g[t + n] * v2;
      }
      out.at(y, x, 0) = static_cast<float>(bx * basis.inv_x);
      out.at(y, x, 1) = static_cast<float>(by * basis.inv_x);
      out.at(y, x, 2) = static_cast<float>(basis.q[1][0] * b1 + basis.q[1][1] * bxx + basis.q[1][2] * byy);
      out.at(y, x, 3) = static_cast<float>(basis.q[2][0] * b1 + basis.q[2][1] * bxx + basis.q[2][2] * byy);
      out.at(y, x, 4) = static_cast<float>(bxy * basis.inv_xy);
    }
  }
  return out;
}

FlowField farneback_flow(const FrameTensor& frame_a, const FrameTensor& frame_b,
                         const FarnebackParams& params) {
  require_grey(frame_a, "farneback_flow");
  require_grey(frame_b, "farneback_flow");
  if (!frame_a.same_shape(frame_b)) {
    throw Error(Errc::InconsistentDimensions, "farneback_flow: frames differ in size");
  }
  if (params.levels < 1 || params.poly_n < 1 || params.winsize < 1 || params.iterations < 1 ||
      !(params.pyr_scale > 0.0 && params.pyr_scale < 1.0)) {
    throw Error(Errc::Usage, "farneback_flow: invalid parameters");
  }
  const int min_side = (1 << params.levels) * params.poly_n;
  if (frame_a.height() < min_side || frame_a.width() < min_side) {
    throw Error(Errc::FrameTooSmall, "farneback_flow needs at least " + std::to_string(min_side) +
                                         " pixels per side");
  }

  FlowField flow;
  for (int level = params.levels - 1; level >= 0; --level) {
    const double scale = std::pow(params.pyr_scale, level);
    const int lh = static_cast<int>(std::lround(frame_a.height() * scale));
    const int lw = static_cast<int>(std::lround(frame_a.width() * scale));
    FrameTensor a = frame_a;
    FrameTensor b = frame_b;
    if (level > 0) {
      const double sigma = (1.0 / scale - 1.0) * 0.5;
      const int ksize = std::max(3, static_cast<int>(std::lround(sigma * 5)) | 1);
      a = resize_bilinear(gaussian_blur(a, sigma, ksize / 2), lh, lw);
      b = resize_bilinear(gaussian_blur(b, sigma, ksize / 2), lh, lw);
    }
    if (flow.u.empty()) {
      flow = FlowField(lh, lw);
    } else {
      flow = resize_flow(flow, lh, lw, static_cast<float>(1.0 / params.pyr_scale));
    }
    const FrameTensor r0 = polynomial_expansion(a, params.poly_n, params.poly_sigma);
    const FrameTensor r1 = polynomial_expansion(b, params.poly_n, params.poly_sigma);
    FrameTensor m = update_matrices(r0, r1, flow);
    for (int it = 0; it < params.iterations; ++it) {
      box_blur_channels(m, params.winsize);
      solve_flow(m, flow);
      if (it + 1 < params.iterations) m = update_matrices(r0, r1, flow);
    }
  }
  return flow;
}

// ---------------------------------------------------------------------------
// Renderers

FrameTensor render_dense(const FlowField& flow) {
  FrameTensor out(flow.height, flow.width, 3);
  double max_mag = 0.0;
  std::vector<double> mag(flow.u.size());
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    mag[i] = std::hypot(static_cast<double>(flow.u[i]), static_cast<double>(flow.v[i]));
    if (!std::isfinite(mag[i])) throw Error(Errc::ShapeMismatch, "render_dense: non-finite flow");
    max_mag = std::max(max_mag, mag[i]);
  }
  if (max_mag < 1e-9) return out;
  auto dst = out.data();
  for (std::size_t i = 0; i < mag.size(); ++i) {
    double hue = std::atan2(static_cast<double>(flow.v[i]), static_cast<double>(flow.u[i])) * 180.0 /
                 std::numbers::pi;
    if (hue < 0.0) hue += 360.0;
    if (hue >= 360.0) hue -= 360.0;
    const double value = mag[i] / max_mag;
    const double sector = hue / 60.0;
    const double x = value * (1.0 - std::abs(std::fmod(sector, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(sector)) {
      case 0: r = value; g = x; break;
      case 1: r = x; g = value; break;
      case 2: g = value; b = x; break;
      case 3: g = x; b = value; break;
      case 4: r = x; b = value; break;
      default: r = value; b = x; break;
    }
    dst[3 * i] = static_cast<float>(255.0 * r);
    dst[3 * i + 1] = static_cast<float>(255.0 * g);
    dst[3 * i + 2] = static_cast<float>(255.0 * b);
  }
  return out;
}

const std::array<std::array<float, 3>, 16>& track_palette() {
  static const std::array<std::array<float, 3>, 16> palette{{
      {255, 0, 0},     {0, 255, 0},     {0, 0, 255},     {255, 255, 0},
      {255, 0, 255},   {0, 255, 255},   {255, 128, 0},   {128, 0, 255},
      {0, 255, 128},   {255, 0, 128},   {128, 255, 0},   {0, 128, 255},
      {255, 255, 255}, {255, 128, 128}, {128, 255, 128}, {128, 128, 255},
  }};
  return palette;
}

FrameTensor render_sparse(const TrackSet& tracks, int canvas_h, int canvas_w) {
  FrameTensor canvas(canvas_h, canvas_w, 3);
  const auto& palette = track_palette();
  auto plot = [&](int x, int y, const std::array<float, 3>& color) {
    if (x < 0 || y < 0 || x >= canvas_w || y >= canvas_h) return;
    for (int c = 0; c < 3; ++c) canvas.at(y, x, c) = color[c];
  };
  for (std::size_t id = 0; id < tracks.tracks.size(); ++id) {
    const auto& points = tracks.tracks[id].points;
    const auto& color = palette[id % palette.size()];
    if (points.empty()) continue;
    int x0 = static_cast<int>(std::lround(points[0].x));
    int y0 = static_cast<int>(std::lround(points[0].y));
    plot(x0, y0, color);
    for (std::size_t i = 1; i < points.size(); ++i) {
      const int x1 = static_cast<int>(std::lround(points[i].x));
      const int y1 = static_cast<int>(std::lround(points[i].y));
      // Bresenham
      int x = x0, y = y0;
      const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
      const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
      int err = dx + dy;
      while (true) {
        plot(x, y, color);
        if (x == x1 && y == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
          err += dy;
          x += sx;
        }
        if (e2 <= dx) {
          err += dx;
          y += sy;
        }
      }
      x0 = x1;
      y0 = y1;
    }
  }
  return canvas;
}

}  // namespace motility::optflow
