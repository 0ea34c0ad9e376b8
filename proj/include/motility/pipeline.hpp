#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "motility/dataio.hpp"
#include "motility/eval.hpp"
#include "motility/represent.hpp"

namespace motility::pipeline {

// Everything that determines a run. Serialized into each output directory.
struct RunConfig {
  std::string manifest;
  std::string cache_dir;  // empty: no cache, samples kept in memory
  std::string output_dir;

  std::string rep = "dense";
  int stride = 1;
  bool with_participant_data = false;
  bool with_concentration = false;

  // cnn, zeror, simple-linear, elastic-net, random-tree, random-forest
  std::string method = "cnn";
  // Classical inputs: tamura, participant or fused.
  std::string features = "tamura";

  std::uint64_t seed = 1;
  int folds = 3;
  int workers = 1;
  int windows_per_video = 250;

  // cnn
  int max_epochs = 200;
  int patience = 20;
  int batch_size = 16;
  double lr = 0.002;
  std::string validation = "test-fold";  // test-fold or none
  int stem_width = 8;
  std::vector<int> widths{8, 16, 32, 64};
  std::vector<int> blocks{2, 2, 2, 2};
  std::vector<int> hidden{2048, 2048};

  // classical
  double lambda = 0.01;
  double alpha_mix = 0.5;
  int max_depth = -1;
  int min_leaf = 5;
  int n_trees = 100;

  bool emit_plots = false;

  // Usage on any inconsistent field.
  void validate() const;
  represent::Representation representation() const;
  bool is_cnn() const { return method == "cnn"; }

  std::string to_json() const;  // canonical: sorted keys, two-space indent
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  std::uint64_t hash() const;  // FNV-1a 64 over to_json()
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

struct ExtractSummary {
  int videos = 0;
  std::int64_t windows = 0;
  std::int64_t computed = 0;  // built this run
  std::int64_t cached = 0;    // already present
};

// Builds and caches every window tensor (and Tamura vectors for classical
// methods). Needs a cache directory.
ExtractSummary extract(const RunConfig& config, const std::vector<VideoRecord>& records);

struct CvRun {
  eval::FoldPlan plan;
  std::vector<eval::MethodReport> reports;  // method first, zeror last
  std::optional<eval::Verdict> verdict;     // method against zeror
};

// Participant-level k-fold cross-validation of the configured method with
// the zeror baseline alongside. Writes config.json, config.hash,
// report.csv, report_samples.csv, report.txt, folds.csv, predictions.csv
// (and plots.csv) into the output directory when one is set.
CvRun evaluate(const RunConfig& config, const std::vector<VideoRecord>& records);

// Fits on every record and writes the model (model.mnn or model.mcm) plus
// the config into the output directory. Returns the model path.
std::filesystem::path train(const RunConfig& config, const std::vector<VideoRecord>& records);

struct Prediction {
  eval::Triple raw{};      // model output
  eval::Triple clamped{};  // limited to [0, 100] for display
  int samples = 0;
};

// Per-video prediction from a saved model. ShapeMismatch when the model was
// trained for another representation, UnreadableCheckpoint on a bad file.
Prediction predict(const RunConfig& config, const std::filesystem::path& model, const VideoRecord& record);

// Recomputes the hash of <dir>/config.json and compares with config.hash.
bool verify(const std::filesystem::path& output_dir, std::string* message = nullptr);

std::vector<VideoRecord> load_records(const RunConfig& config);

}  // namespace motility::pipeline
