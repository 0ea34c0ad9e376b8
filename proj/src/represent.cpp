#include "motility/represent.hpp"

#include <algorithm>
#include <cmath>

#include "motility/error.hpp"
#include "motility/optflow.hpp"
#include "motility/parallel.hpp"
#include "motility/tensor_io.hpp"

namespace motility::represent {

namespace {

const char* flow_suffix(FlowKind kind) {
  switch (kind) {
    case FlowKind::Sparse: return "sparse";
    case FlowKind::Dense: return "dense";
    case FlowKind::Both: return "both";
  }
  return "?";
}

void require_length(const SampleWindow& window, std::int64_t length, const char* who) {
  if (window.length != length) {
    throw Error(Errc::ShapeMismatch, std::string(who) + " needs a window of " + std::to_string(length) +
                                         " frames, got " + std::to_string(window.length));
  }
}

FrameTensor grey_frame(FrameSequence& frames, std::int64_t index) {
  return ensure_greyscale(frames.read(index));
}

FrameTensor colour_frame(FrameSequence& frames, std::int64_t index) {
  FrameTensor f = frames.read(index);
  return f.channels() == 1 ? grey_to_rgb(f) : f;
}

}  // namespace

Shape Representation::shape() const {
  switch (kind) {
    case RepKind::GreyStack: return {kInputSide, kInputSide, kWindowLength};
    case RepKind::VerticalMatrix: return {kWindowLength, kMatrixSide * kMatrixSide, 1};
    default: return {kInputSide, kInputSide, 3};
  }
}

std::optional<Shape> Representation::motion_shape() const {
  if (!two_stream()) return std::nullopt;
  return Shape{kInputSide, kInputSide, flow == FlowKind::Both ? 6 : 3};
}

bool Representation::uses_dense() const {
  return kind == RepKind::Dense || (two_stream() && flow != FlowKind::Sparse);
}

bool Representation::uses_sparse() const {
  return kind == RepKind::Sparse || (two_stream() && flow != FlowKind::Dense);
}

std::string Representation::name() const {
  switch (kind) {
    case RepKind::Single: return "single";
    case RepKind::GreyStack: return "greystack";
    case RepKind::VerticalMatrix: return "vmatrix";
    case RepKind::Sparse: return "sparse";
    case RepKind::Dense: return "dense";
    case RepKind::TwoStream: return std::string("two-stream-") + flow_suffix(flow);
  }
  return "?";
}

std::string Representation::cache_name() const {
  std::string n = name();
  if (uses_dense()) n += "-s" + std::to_string(stride);
  n += normalize == NormalizeMode::Unit ? "-unit" : "-sym";
  return n;
}

Representation Representation::parse(const std::string& name, int stride) {
  Representation rep;
  rep.stride = stride;
  if (name == "single") {
    rep.kind = RepKind::Single;
  } else if (name == "greystack") {
    rep.kind = RepKind::GreyStack;
  } else if (name == "vmatrix") {
    rep.kind = RepKind::VerticalMatrix;
  } else if (name == "sparse") {
    rep.kind = RepKind::Sparse;
  } else if (name == "dense") {
    rep.kind = RepKind::Dense;
  } else if (name == "two-stream-sparse" || name == "two-stream-dense" || name == "two-stream-both") {
    rep.kind = RepKind::TwoStream;
    const std::string tail = name.substr(11);
    rep.flow = tail == "sparse" ? FlowKind::Sparse : (tail == "dense" ? FlowKind::Dense : FlowKind::Both);
  } else {
    throw Error(Errc::Usage, "unknown representation '" + name + "'");
  }
  if (stride < 1) throw Error(Errc::StrideOutOfRange, "stride must be at least 1");
  return rep;
}

FrameTensor build_single(const SampleWindow& window, FrameSequence& frames, NormalizeMode mode) {
  if (window.length < 1) throw Error(Errc::ShapeMismatch, "build_single needs a non-empty window");
  return normalize(resize_bilinear(colour_frame(frames, window.start_frame), kInputSide, kInputSide), mode);
}

FrameTensor build_greystack(const SampleWindow& window, FrameSequence& frames, NormalizeMode mode) {
  require_length(window, kWindowLength, "build_greystack");
  std::vector<FrameTensor> channels;
  channels.reserve(kWindowLength);
  for (int i = 0; i < kWindowLength; ++i) {
    channels.push_back(resize_bilinear(grey_frame(frames, window.start_frame + i), kInputSide, kInputSide));
  }
  return normalize(concat_channels(channels), mode);
}

FrameTensor build_vertical_matrix(const SampleWindow& window, FrameSequence& frames, NormalizeMode mode) {
  require_length(window, kWindowLength, "build_vertical_matrix");
  constexpr int row_len = kMatrixSide * kMatrixSide;
  FrameTensor out(kWindowLength, row_len, 1);
  for (int i = 0; i < kWindowLength; ++i) {
    const auto row =
        flatten_row_major(resize_bilinear(grey_frame(frames, window.start_frame + i), kMatrixSide, kMatrixSide));
    std::copy(row.begin(), row.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i) * row_len);
  }
  return normalize(out, mode);
}

FrameTensor build_flow_rep(const SampleWindow& window, FrameSequence& frames, FlowKind kind, int stride,
                           NormalizeMode mode) {
  if (kind == FlowKind::Both) {
    const FrameTensor parts[2] = {build_flow_rep(window, frames, FlowKind::Sparse, stride, mode),
                                  build_flow_rep(window, frames, FlowKind::Dense, stride, mode)};
    return concat_channels(parts);
  }
  FrameTensor rendered;
  if (kind == FlowKind::Sparse) {
    require_length(window, kWindowLength, "sparse flow");
    std::vector<FrameTensor> seq;
    seq.reserve(kWindowLength);
    for (int i = 0; i < kWindowLength; ++i) seq.push_back(grey_frame(frames, window.start_frame + i));
    const auto seeds = optflow::good_features(seq.front());
    const auto tracks = optflow::lucas_kanade_track(seq, seeds);
    rendered = optflow::render_sparse(tracks, seq.front().height(), seq.front().width());
  } else {
    if (stride < 1 || window.start_frame + stride >= frames.frame_count()) {
      throw Error(Errc::StrideOutOfRange, "stride " + std::to_string(stride) + " from frame " +
                                              std::to_string(window.start_frame) + " leaves the video (" +
                                              std::to_string(frames.frame_count()) + " frames)");
    }
    const FrameTensor a = grey_frame(frames, window.start_frame);
    const FrameTensor b = grey_frame(frames, window.start_frame + stride);
    rendered = optflow::render_dense(optflow::farneback_flow(a, b));
  }
  return normalize(resize_bilinear(rendered, kInputSide, kInputSide), mode);
}

std::pair<FrameTensor, FrameTensor> build_two_stream(const SampleWindow& window, FrameSequence& frames,
                                                     FlowKind kind, int stride, NormalizeMode mode) {
  return {build_single(window, frames, mode), build_flow_rep(window, frames, kind, stride, mode)};
}

std::pair<FrameTensor, FrameTensor> build(const Representation& rep, const SampleWindow& window,
                                          FrameSequence& frames) {
  switch (rep.kind) {
    case RepKind::Single: return {build_single(window, frames, rep.normalize), {}};
    case RepKind::GreyStack: return {build_greystack(window, frames, rep.normalize), {}};
    case RepKind::VerticalMatrix: return {build_vertical_matrix(window, frames, rep.normalize), {}};
    case RepKind::Sparse:
      return {build_flow_rep(window, frames, FlowKind::Sparse, rep.stride, rep.normalize), {}};
    case RepKind::Dense:
      return {build_flow_rep(window, frames, FlowKind::Dense, rep.stride, rep.normalize), {}};
    case RepKind::TwoStream: return build_two_stream(window, frames, rep.flow, rep.stride, rep.normalize);
  }
  throw Error(Errc::Usage, "unknown representation kind");
}

namespace {

std::vector<double> feature_values(const ParticipantFeatures& f, bool include_concentration) {
  std::vector<double> v{f.age, f.bmi, f.abstinence};
  if (include_concentration) {
    if (!f.concentration) throw Error(Errc::MissingConcentration, "sperm concentration is missing");
    v.push_back(*f.concentration);
  }
  return v;
}

}  // namespace

FoldStats compute_fold_stats(const std::vector<ParticipantFeatures>& training, bool include_concentration) {
  if (training.empty()) throw Error(Errc::EmptyDataset, "no training participants for feature statistics");
  const std::size_t d = include_concentration ? 4 : 3;
  FoldStats stats;
  stats.include_concentration = include_concentration;
  stats.mean.assign(d, 0.0);
  stats.stddev.assign(d, 0.0);
  for (const auto& f : training) {
    const auto v = feature_values(f, include_concentration);
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += v[j];
  }
  for (double& m : stats.mean) m /= static_cast<double>(training.size());
  for (const auto& f : training) {
    const auto v = feature_values(f, include_concentration);
    for (std::size_t j = 0; j < d; ++j) stats.stddev[j] += (v[j] - stats.mean[j]) * (v[j] - stats.mean[j]);
  }
  for (double& s : stats.stddev) s = std::sqrt(s / static_cast<double>(training.size()));
  return stats;
}

std::vector<float> participant_vector(const ParticipantFeatures& features, const FoldStats& stats) {
  const auto v = feature_values(features, stats.include_concentration);
  std::vector<float> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    out[j] = stats.stddev[j] < 1e-9 ? 0.0f : static_cast<float>((v[j] - stats.mean[j]) / stats.stddev[j]);
  }
  return out;
}

std::filesystem::path cache_path(const std::filesystem::path& cache_root, const std::string& participant_id,
                                 const Representation& rep, std::int64_t window_index) {
  return cache_root / participant_id / rep.cache_name() / (std::to_string(window_index) + ".ten");
}

std::vector<Sample> build_video_samples(const VideoRecord& record, const Representation& rep,
                                        const std::vector<SampleWindow>& windows,
                                        const std::optional<std::filesystem::path>& cache_root,
                                        std::int64_t first_index) {
  std::vector<Sample> samples(windows.size());
  const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), windows.size());
  const Shape primary = rep.shape();
  parallel_for(chunks, [&](std::size_t chunk) {
    const std::size_t lo = windows.size() * chunk / chunks;
    const std::size_t hi = windows.size() * (chunk + 1) / chunks;
    std::unique_ptr<FrameSequence> frames;
    for (std::size_t i = lo; i < hi; ++i) {
      Sample& s = samples[i];
      s.participant_id = record.participant_id;
      s.targets = record.targets;
      s.window_index = first_index + static_cast<std::int64_t>(i);
      std::optional<std::filesystem::path> path;
      if (cache_root) {
        path = cache_path(*cache_root, record.participant_id, rep, s.window_index);
        if (std::filesystem::exists(*path)) {
          FrameTensor t = read_ten_frame(*path);
          if (rep.two_stream()) {
            if (t.channels() != 3 + rep.motion_shape()->at(2)) {
              throw Error(Errc::ShapeMismatch, "cached two-stream tensor " + path->string() + " has " +
                                                   std::to_string(t.channels()) + " channels");
            }
            std::vector<FrameTensor> parts;
            for (int c = 0; c < t.channels(); ++c) parts.push_back(extract_channel(t, c));
            s.input = concat_channels(std::span(parts).subspan(0, 3));
            s.motion = concat_channels(std::span(parts).subspan(3));
          } else {
            s.input = std::move(t);
          }
          if (s.input.height() != primary[0] || s.input.width() != primary[1] ||
              s.input.channels() != primary[2]) {
            throw Error(Errc::ShapeMismatch, "cached tensor " + path->string() + " has the wrong shape");
          }
          continue;
        }
      }
      if (!frames) frames = open_frames(record);
      try {
        auto built = build(rep, windows[i], *frames);
        s.input = std::move(built.first);
        s.motion = std::move(built.second);
      } catch (const Error& e) {
        throw Error(e.code(), "participant " + record.participant_id + ", window " + std::to_string(s.window_index) + ": " +
                                  e.detail());
      }
      if (path) {
        std::filesystem::create_directories(path->parent_path());
        if (rep.two_stream()) {
          const FrameTensor parts[2] = {s.input, s.motion};
          write_ten(*path, concat_channels(parts));
        } else {
          write_ten(*path, s.input);
        }
      }
    }
  });
  return samples;
}

}  // namespace motility::represent
