#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "motility/tensor.hpp"

namespace motility {

struct ParticipantFeatures {
  double age = 0.0;         // years
  double bmi = 0.0;         // kg/m^2
  double abstinence = 0.0;  // days
  std::optional<double> concentration;  // 10^6 / mL

  friend bool operator==(const ParticipantFeatures&, const ParticipantFeatures&) = default;
};

// Percentages of progressive, non-progressive and immotile spermatozoa.
struct MotilityTargets {
  double progressive = 0.0;
  double nonprogressive = 0.0;
  double immotile = 0.0;

  double sum() const { return progressive + nonprogressive + immotile; }
  double operator[](int i) const { return i == 0 ? progressive : (i == 1 ? nonprogressive : immotile); }
  double& operator[](int i) { return i == 0 ? progressive : (i == 1 ? nonprogressive : immotile); }

  friend bool operator==(const MotilityTargets&, const MotilityTargets&) = default;
};

inline constexpr int kTargetCount = 3;
inline constexpr const char* kTargetNames[kTargetCount] = {"progressive", "nonprogressive",
                                                          "immotile"};

struct VideoRecord {
  std::string participant_id;
  std::filesystem::path frame_source;
  double fps = 50.0;
  ParticipantFeatures features;
  MotilityTargets targets;
  std::int64_t frame_count = 0;

  friend bool operator==(const VideoRecord&, const VideoRecord&) = default;
};

struct SampleWindow {
  std::string video;  // participant id
  std::int64_t start_frame = 0;
  std::int64_t length = 0;

  friend bool operator==(const SampleWindow&, const SampleWindow&) = default;
};

// Manifest CSV with the header
// participant_id,frame_source,fps,frame_count,age,bmi,abstinence,concentration,
// progressive,nonprogressive,immotile
// Relative frame sources resolve against `base_dir`.
std::vector<VideoRecord> parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
std::vector<VideoRecord> load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const std::vector<VideoRecord>& records);
void write_manifest(const std::filesystem::path& path, const std::vector<VideoRecord>& records);

// Checks the target-sum band: [98, 102] silent, [90, 110] warning,
// otherwise TargetSumOutOfRange.
void check_targets(const std::string& participant_id, const MotilityTargets& targets);

// Sequential or random-access reader over one video's frames. Single
// consumer: one reader per handle.
class FrameSequence {
 public:
  virtual ~FrameSequence() = default;
  virtual std::int64_t frame_count() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual int channels() const = 0;
  // Decodes frame `index` as an H x W x C tensor with values in [0, 255].
  virtual FrameTensor read(std::int64_t index) = 0;

  // In-order iteration.
  bool has_next() const { return cursor_ < frame_count(); }
  FrameTensor next() { return read(cursor_++); }

 private:
  std::int64_t cursor_ = 0;
};

// Opens a raw `.y8seq` / `.rgbseq` file or a directory of images (PNG, PPM,
// PGM) in lexicographic order.
std::unique_ptr<FrameSequence> open_frames(const std::filesystem::path& source);
std::unique_ptr<FrameSequence> open_frames(const VideoRecord& record);

// Raw sequence writers. Frames must share one shape; values are rounded and
// clamped to [0, 255]. `.y8seq` takes 1-channel frames, `.rgbseq` 3-channel.
void write_y8seq(const std::filesystem::path& path, const std::vector<FrameTensor>& frames);
void write_rgbseq(const std::filesystem::path& path, const std::vector<FrameTensor>& frames);

// Streams frames one by one into a `.y8seq` file.
class Y8SeqWriter {
 public:
  Y8SeqWriter(const std::filesystem::path& path, int width, int height);
  ~Y8SeqWriter();
  Y8SeqWriter(const Y8SeqWriter&) = delete;
  Y8SeqWriter& operator=(const Y8SeqWriter&) = delete;

  void append(const FrameTensor& frame);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// 8-bit PNG writer (1 or 3 channels), used for fixtures and exports.
void write_png(const std::filesystem::path& path, const FrameTensor& frame);

// start_i = round(i (frame_count - length) / (n_samples - 1)).
std::vector<SampleWindow> schedule_windows(std::int64_t frame_count, int n_samples = 250,
                                           int length = 30, const std::string& video = {});

// Two indices per second: round(s fps) and round(s fps + fps / 2).
std::vector<std::int64_t> classical_frame_indices(double fps, int seconds = 60);

}  // namespace motility
