#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "motility/dataio.hpp"
#include "motility/imgproc.hpp"
#include "motility/tensor.hpp"

namespace motility::represent {

inline constexpr int kInputSide = 224;
inline constexpr int kWindowLength = 30;
inline constexpr int kMatrixSide = 64;  // vertical matrix rows are 64 x 64 frames

enum class RepKind { Single, GreyStack, VerticalMatrix, Sparse, Dense, TwoStream };
enum class FlowKind { Sparse, Dense, Both };

using Shape = std::array<int, 3>;  // H, W, C

struct Representation {
  RepKind kind = RepKind::Dense;
  FlowKind flow = FlowKind::Dense;  // two-stream motion input
  int stride = 1;                   // dense flow frame gap
  NormalizeMode normalize = NormalizeMode::Symmetric;

  bool two_stream() const { return kind == RepKind::TwoStream; }
  Shape shape() const;  // primary input (the raw frame for two-stream)
  std::optional<Shape> motion_shape() const;
  bool uses_dense() const;
  bool uses_sparse() const;

  // Cache directory name, e.g. "greystack", "dense-s10", "two-stream-both".
  std::string cache_name() const;
  // CLI name without the stride: single, greystack, vmatrix, sparse, dense,
  // two-stream-sparse, two-stream-dense, two-stream-both.
  std::string name() const;
  static Representation parse(const std::string& name, int stride = 1);

  friend bool operator==(const Representation&, const Representation&) = default;
};

// A model input. `motion` is only set for two-stream representations.
struct Sample {
  FrameTensor input;
  FrameTensor motion;
  std::vector<float> participant;
  MotilityTargets targets;
  std::string participant_id;
  std::int64_t window_index = 0;
};

FrameTensor build_single(const SampleWindow& window, FrameSequence& frames,
                         NormalizeMode mode = NormalizeMode::Symmetric);
FrameTensor build_greystack(const SampleWindow& window, FrameSequence& frames,
                            NormalizeMode mode = NormalizeMode::Symmetric);
FrameTensor build_vertical_matrix(const SampleWindow& window, FrameSequence& frames,
                                  NormalizeMode mode = NormalizeMode::Symmetric);
// Sparse: tracks seeded at the window start and followed over its 30
// frames. Dense: flow between the window start and start + stride.
FrameTensor build_flow_rep(const SampleWindow& window, FrameSequence& frames, FlowKind kind, int stride = 1,
                           NormalizeMode mode = NormalizeMode::Symmetric);
// (raw frame, motion image); Both concatenates sparse then dense channels.
std::pair<FrameTensor, FrameTensor> build_two_stream(const SampleWindow& window, FrameSequence& frames,
                                                     FlowKind kind, int stride = 1,
                                                     NormalizeMode mode = NormalizeMode::Symmetric);

// Dispatches on rep.kind. For two-stream the pair is returned as
// (input, motion); otherwise motion is empty.
std::pair<FrameTensor, FrameTensor> build(const Representation& rep, const SampleWindow& window,
                                          FrameSequence& frames);

// Per-feature z-score statistics from a training fold.
struct FoldStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  bool include_concentration = false;
};

// Population statistics over `training`; MissingConcentration when the
// toggle is on and a record lacks the value.
FoldStats compute_fold_stats(const std::vector<ParticipantFeatures>& training, bool include_concentration);

// [age, bmi, abstinence(, concentration)], z-scored; a std below 1e-9 maps
// the entry to 0.
std::vector<float> participant_vector(const ParticipantFeatures& features, const FoldStats& stats);

// <cache>/<participant>/<rep>/<window_index>.ten
std::filesystem::path cache_path(const std::filesystem::path& cache_root, const std::string& participant_id,
                                 const Representation& rep, std::int64_t window_index);

// Builds the samples for one video's windows (no participant vector),
// reading from and filling the cache when a root is given. Work is spread
// over the worker pool, one frame reader per chunk.
std::vector<Sample> build_video_samples(const VideoRecord& record, const Representation& rep,
                                        const std::vector<SampleWindow>& windows,
                                        const std::optional<std::filesystem::path>& cache_root = {},
                                        std::int64_t first_index = 0);

}  // namespace motility::represent
