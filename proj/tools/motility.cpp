// motility: command-line front end for extraction, training and evaluation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "motility/binary_io.hpp"
#include "motility/dataio.hpp"
#include "motility/error.hpp"
#include "motility/log.hpp"
#include "motility/pipeline.hpp"
#include "motility/synth.hpp"

namespace fs = std::filesystem;
using namespace motility;
using pipeline::RunConfig;

namespace {

// Flags shared by every pipeline subcommand. Values start from --config
// when given and are overridden by explicit flags.
struct CommonFlags {
  std::string config_file;
  RunConfig cfg;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  auto& c = f.cfg;
  cmd->add_option("--config", f.config_file, "Run config JSON to start from")->check(CLI::ExistingFile);
  cmd->add_option("--manifest", c.manifest, "Manifest CSV");
  cmd->add_option("--cache", c.cache_dir, "Cache directory for representations and features");
  cmd->add_option("--out", c.output_dir, "Output directory");
  cmd->add_option("--rep", c.rep, "Representation")
      ->check(CLI::IsMember({"single", "greystack", "vmatrix", "sparse", "dense", "two-stream-sparse",
                             "two-stream-dense", "two-stream-both"}));
  cmd->add_option("--stride", c.stride, "Dense flow frame gap")->check(CLI::IsMember({1, 10}));
  cmd->add_flag("--with-participant-data", c.with_participant_data, "Fuse age, BMI and abstinence");
  cmd->add_flag("--with-concentration", c.with_concentration, "Also fuse sperm concentration");
  cmd->add_option("--method", c.method, "cnn, zeror, simple-linear, elastic-net, random-tree, random-forest");
  cmd->add_option("--features", c.features, "Classical inputs: tamura, participant, fused");
  cmd->add_option("--seed", c.seed, "Seed for folds, initialization and shuffling");
  cmd->add_option("--folds", c.folds, "Cross-validation folds");
  cmd->add_option("--workers", c.workers, "Worker threads; 1 is deterministic");
  cmd->add_option("--windows", c.windows_per_video, "Sample windows per video");
  cmd->add_option("--epochs", c.max_epochs, "Maximum epochs");
  cmd->add_option("--patience", c.patience, "Early stopping patience");
  cmd->add_option("--batch", c.batch_size, "Batch size");
  cmd->add_option("--lr", c.lr, "Nadam learning rate");
  cmd->add_option("--validation", c.validation, "test-fold or none");
  cmd->add_option("--stem-width", c.stem_width, "Stem convolution width");
  cmd->add_option("--widths", c.widths, "Residual stage widths")->delimiter(',');
  cmd->add_option("--blocks", c.blocks, "Residual blocks per stage")->delimiter(',');
  cmd->add_option("--hidden", c.hidden, "Hidden fully connected widths")->delimiter(',');
  cmd->add_option("--lambda", c.lambda, "Elastic-net penalty");
  cmd->add_option("--alpha", c.alpha_mix, "Elastic-net L1 share");
  cmd->add_option("--max-depth", c.max_depth, "Tree depth limit, negative for none");
  cmd->add_option("--min-leaf", c.min_leaf, "Minimum samples per leaf");
  cmd->add_option("--trees", c.n_trees, "Forest size");
  cmd->add_flag("--emit-plots", c.emit_plots, "Write per-method MAE bar-chart data");
  cmd->add_flag("-v,--verbose", f.verbose, "Per-epoch progress");
}

// Re-applies explicitly given flags on top of the config file.
RunConfig resolve(CLI::App* cmd, const CommonFlags& f) {
  if (f.config_file.empty()) {
    f.cfg.validate();
    return f.cfg;
  }
  RunConfig base = RunConfig::load(f.config_file);
  const RunConfig& given = f.cfg;
  auto take = [&](const char* flag, auto& dst, const auto& src) {
    if (cmd->count(flag) > 0) dst = src;
  };
  take("--manifest", base.manifest, given.manifest);
  take("--cache", base.cache_dir, given.cache_dir);
  take("--out", base.output_dir, given.output_dir);
  take("--rep", base.rep, given.rep);
  take("--stride", base.stride, given.stride);
  take("--with-participant-data", base.with_participant_data, given.with_participant_data);
  take("--with-concentration", base.with_concentration, given.with_concentration);
  take("--method", base.method, given.method);
  take("--features", base.features, given.features);
  take("--seed", base.seed, given.seed);
  take("--folds", base.folds, given.folds);
  take("--workers", base.workers, given.workers);
  take("--windows", base.windows_per_video, given.windows_per_video);
  take("--epochs", base.max_epochs, given.max_epochs);
  take("--patience", base.patience, given.patience);
  take("--batch", base.batch_size, given.batch_size);
  take("--lr", base.lr, given.lr);
  take("--validation", base.validation, given.validation);
  take("--stem-width", base.stem_width, given.stem_width);
  take("--widths", base.widths, given.widths);
  take("--blocks", base.blocks, given.blocks);
  take("--hidden", base.hidden, given.hidden);
  take("--lambda", base.lambda, given.lambda);
  take("--alpha", base.alpha_mix, given.alpha_mix);
  take("--max-depth", base.max_depth, given.max_depth);
  take("--min-leaf", base.min_leaf, given.min_leaf);
  take("--trees", base.n_trees, given.n_trees);
  take("--emit-plots", base.emit_plots, given.emit_plots);
  base.validate();
  return base;
}

// Classical runs with participant data but the default feature set fuse it.
RunConfig apply_feature_toggle(CLI::App* cmd, RunConfig c) {
  if (!c.is_cnn() && c.with_participant_data && cmd->count("--features") == 0 && c.features == "tamura") {
    c.features = "fused";
  }
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_triple(const char* label, const eval::Triple& t) {
  std::printf("%s progressive %.2f, non-progressive %.2f, immotile %.2f\n", label, t[0], t[1], t[2]);
}

VideoRecord find_record(const RunConfig& c, const std::string& id) {
  for (auto& r : pipeline::load_records(c)) {
    if (r.participant_id == id) return r;
  }
  throw Error(Errc::UnknownId, "participant " + id + " is not in " + c.manifest);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sperm motility prediction from microscopy videos"};
  app.require_subcommand(1);

  CommonFlags prepare_f, extract_f, train_f, evaluate_f, predict_f;

  auto* prepare = app.add_subcommand("prepare", "Validate a manifest and report its videos");
  add_common(prepare, prepare_f);

  auto* extract = app.add_subcommand("extract", "Build and cache representations");
  add_common(extract, extract_f);

  auto* train = app.add_subcommand("train", "Fit one model on every video in the manifest");
  add_common(train, train_f);

  auto* evaluate = app.add_subcommand("evaluate", "Participant-level cross-validation against zeror");
  add_common(evaluate, evaluate_f);

  auto* predict = app.add_subcommand("predict", "Predict the three motility values for one video");
  add_common(predict, predict_f);
  std::string model_path, video_id, frames_path;
  bool json_out = false;
  predict->add_option("--model", model_path, "model.mnn or model.mcm")->required();
  auto* video_opt = predict->add_option("--video", video_id, "Participant id from the manifest");
  predict->add_option("--frames", frames_path, "Frame source (.y8seq, .rgbseq or PNG directory)")
      ->excludes(video_opt);
  predict->add_flag("--json", json_out, "Raw predictions as JSON");

  auto* report = app.add_subcommand("report", "Print and combine evaluation reports");
  std::vector<std::string> report_dirs;
  std::string plot_file;
  report->add_option("dirs", report_dirs, "Evaluation output directories")->required()->check(CLI::ExistingDirectory);
  report->add_option("--emit-plots", plot_file, "Write combined per-method MAE bar-chart data here");

  auto* verify = app.add_subcommand("verify", "Check an output directory against its config hash");
  std::string verify_dir;
  bool rerun = false;
  verify->add_option("dir", verify_dir, "Output directory")->required()->check(CLI::ExistingDirectory);
  verify->add_flag("--rerun", rerun, "Re-run the evaluation and compare report.csv byte for byte");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dot-field dataset");
  std::string synth_dir, drift_path;
  synth::DatasetParams sp;
  std::int64_t drift_frames = 6000;
  int drift_w = 160, drift_h = 120;
  synth_cmd->add_option("dir", synth_dir, "Dataset directory");
  synth_cmd->add_option("--videos", sp.videos, "Number of videos");
  synth_cmd->add_option("--frames", sp.frames, "Frames per video");
  synth_cmd->add_option("--width", sp.width, "Frame width");
  synth_cmd->add_option("--height", sp.height, "Frame height");
  synth_cmd->add_option("--dots", sp.dots, "Dots per video");
  synth_cmd->add_option("--seed", sp.seed, "Dataset seed");
  synth_cmd->add_option("--drift", drift_path, "Instead write one long drifting texture sequence here");
  synth_cmd->add_option("--drift-frames", drift_frames, "Frames in the drifting sequence");
  synth_cmd->add_option("--drift-width", drift_w, "Drifting sequence width");
  synth_cmd->add_option("--drift-height", drift_h, "Drifting sequence height");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    auto verbosity = [](const CommonFlags& f) { set_log_level(f.verbose ? LogLevel::Debug : LogLevel::Info); };

    if (*prepare) {
      verbosity(prepare_f);
      const RunConfig c = resolve(prepare, prepare_f);
      const auto records = pipeline::load_records(c);
      std::int64_t frames = 0;
      for (const auto& r : records) {
        auto seq = open_frames(r);
        frames += seq->frame_count();
      }
      std::printf("%zu videos, %lld frames in total\n", records.size(), static_cast<long long>(frames));
      return 0;
    }
    if (*extract) {
      verbosity(extract_f);
      const RunConfig c = apply_feature_toggle(extract, resolve(extract, extract_f));
      const auto s = pipeline::extract(c, pipeline::load_records(c));
      std::printf("%d videos, %lld items: %lld computed, %lld cached (%.1f s)\n", s.videos,
                  static_cast<long long>(s.windows), static_cast<long long>(s.computed),
                  static_cast<long long>(s.cached), seconds_since(t0));
      return 0;
    }
    if (*train) {
      verbosity(train_f);
      const RunConfig c = apply_feature_toggle(train, resolve(train, train_f));
      const auto path = pipeline::train(c, pipeline::load_records(c));
      std::printf("model written to %s (%.1f s)\n", path.string().c_str(), seconds_since(t0));
      return 0;
    }
    if (*evaluate) {
      verbosity(evaluate_f);
      const RunConfig c = apply_feature_toggle(evaluate, resolve(evaluate, evaluate_f));
      const auto run = pipeline::evaluate(c, pipeline::load_records(c));
      std::ostringstream table;
      eval::write_report_table(table, run.reports);
      std::cout << table.str();
      std::printf("corrected t-test against zeror: t = %.4f, p = %.4f%s (%.1f s)\n", run.verdict->test.t,
                  run.verdict->test.p, run.verdict->significant ? ", significant" : "", seconds_since(t0));
      return 0;
    }
    if (*predict) {
      verbosity(predict_f);
      const RunConfig c = resolve(predict, predict_f);
      VideoRecord record;
      if (!video_id.empty()) {
        record = find_record(c, video_id);
      } else if (!frames_path.empty()) {
        record.participant_id = fs::path(frames_path).stem().string();
        record.frame_source = frames_path;
        record.frame_count = open_frames(record)->frame_count();
      } else {
        throw Error(Errc::Usage, "predict needs --video or --frames");
      }
      const auto p = pipeline::predict(c, model_path, record);
      if (json_out) {
        nlohmann::json j;
        j["participant_id"] = record.participant_id;
        j["progressive"] = p.raw[0];
        j["nonprogressive"] = p.raw[1];
        j["immotile"] = p.raw[2];
        j["samples"] = p.samples;
        std::cout << j.dump() << '\n';
      } else {
        print_triple((record.participant_id + ":").c_str(), p.clamped);
        std::printf("%d samples, %.1f s\n", p.samples, seconds_since(t0));
      }
      return 0;
    }
    if (*report) {
      std::ostringstream plots;
      plots << "method,target,mae\n";
      for (const auto& dir : report_dirs) {
        std::cout << "== " << dir << "\n" << binio::read_file(fs::path(dir) / "report.txt") << '\n';
        std::istringstream csv(binio::read_file(fs::path(dir) / "report.csv"));
        std::string line;
        std::getline(csv, line);
        while (std::getline(csv, line)) {
          std::istringstream row(line);
          std::string method, fold, target, mae;
          std::getline(row, method, ',');
          std::getline(row, fold, ',');
          std::getline(row, target, ',');
          std::getline(row, mae, ',');
          if (fold == "mean") plots << method << ',' << target << ',' << mae << '\n';
        }
      }
      if (!plot_file.empty()) binio::atomic_write(plot_file, plots.str());
      return 0;
    }
    if (*verify) {
      std::string message;
      const bool ok = pipeline::verify(verify_dir, &message);
      std::printf("config hash: %s (%s)\n", ok ? "ok" : "MISMATCH", message.c_str());
      if (!ok) return 2;
      if (rerun) {
        RunConfig c = RunConfig::load(fs::path(verify_dir) / "config.json");
        const fs::path scratch = fs::temp_directory_path() / ("motility-verify-" + pipeline::hex64(c.hash()));
        fs::remove_all(scratch);
        c.output_dir = scratch.string();
        pipeline::evaluate(c, pipeline::load_records(c));
        const bool same =
            binio::read_file(scratch / "report.csv") == binio::read_file(fs::path(verify_dir) / "report.csv");
        fs::remove_all(scratch);
        std::printf("rerun report: %s\n", same ? "identical" : "DIFFERS");
        if (!same) return 2;
      }
      return 0;
    }
    if (*synth_cmd) {
      if (!drift_path.empty()) {
        synth::write_drift_sequence(drift_path, drift_w, drift_h, drift_frames, sp.seed);
        std::printf("wrote %lld frames to %s\n", static_cast<long long>(drift_frames), drift_path.c_str());
        return 0;
      }
      if (synth_dir.empty()) throw Error(Errc::Usage, "synth needs a directory or --drift");
      const auto records = synth::write_dot_dataset(synth_dir, sp);
      std::printf("wrote %zu videos and %s\n", records.size(), (fs::path(synth_dir) / "manifest.csv").string().c_str());
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
