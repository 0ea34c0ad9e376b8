#include "motility/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "motility/binary_io.hpp"
#include "motility/classical.hpp"
#include "motility/error.hpp"
#include "motility/log.hpp"
#include "motility/neural/train.hpp"
#include "motility/parallel.hpp"
#include "motility/tamura.hpp"
#include "motility/tensor_io.hpp"

namespace motility::pipeline {

using nlohmann::json;

namespace {

[[noreturn]] void usage(const std::string& what) { throw Error(Errc::Usage, what); }

const std::set<std::string> kMethods{"cnn", "zeror", "simple-linear", "elastic-net", "random-tree", "random-forest"};

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::validate() const {
  if (!kMethods.count(method)) usage("unknown method '" + method + "'");
  if (features != "tamura" && features != "participant" && features != "fused") {
    usage("unknown feature set '" + features + "'");
  }
  if (stride != 1 && stride != 10) usage("stride must be 1 or 10");
  if (folds < 2) usage("at least two folds are needed");
  if (workers < 1) usage("workers must be positive");
  if (windows_per_video < 1) usage("windows per video must be positive");
  if (max_epochs < 1 || patience < 1 || batch_size < 1) usage("epochs, patience and batch size must be positive");
  if (!(lr >= 0)) usage("learning rate must be non-negative");
  if (validation != "test-fold" && validation != "none") usage("validation must be test-fold or none");
  if (widths.empty() || widths.size() != blocks.size()) usage("widths and blocks must have equal, nonzero length");
  if (with_concentration && !with_participant_data && is_cnn()) {
    usage("--with-concentration needs --with-participant-data");
  }
  if (!(alpha_mix >= 0 && alpha_mix <= 1) || !(lambda >= 0)) usage("elastic-net parameters out of range");
  if (n_trees < 1 || min_leaf < 1) usage("forest parameters must be positive");
  representation();
}

represent::Representation RunConfig::representation() const {
  try {
    return represent::Representation::parse(rep, stride);
  } catch (const Error& e) {
    throw Error(Errc::Usage, e.detail());
  }
}

std::string RunConfig::to_json() const {
  json j;
  j["manifest"] = manifest;
  j["cache_dir"] = cache_dir;
  j["output_dir"] = output_dir;
  j["rep"] = rep;
  j["stride"] = stride;
  j["with_participant_data"] = with_participant_data;
  j["with_concentration"] = with_concentration;
  j["method"] = method;
  j["features"] = features;
  j["seed"] = seed;
  j["folds"] = folds;
  j["workers"] = workers;
  j["windows_per_video"] = windows_per_video;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["validation"] = validation;
  j["stem_width"] = stem_width;
  j["widths"] = widths;
  j["blocks"] = blocks;
  j["hidden"] = hidden;
  j["lambda"] = lambda;
  j["alpha_mix"] = alpha_mix;
  j["max_depth"] = max_depth;
  j["min_leaf"] = min_leaf;
  j["n_trees"] = n_trees;
  j["emit_plots"] = emit_plots;
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("manifest", c.manifest);
    get("cache_dir", c.cache_dir);
    get("output_dir", c.output_dir);
    get("rep", c.rep);
    get("stride", c.stride);
    get("with_participant_data", c.with_participant_data);
    get("with_concentration", c.with_concentration);
    get("method", c.method);
    get("features", c.features);
    get("seed", c.seed);
    get("folds", c.folds);
    get("workers", c.workers);
    get("windows_per_video", c.windows_per_video);
    get("max_epochs", c.max_epochs);
    get("patience", c.patience);
    get("batch_size", c.batch_size);
    get("lr", c.lr);
    get("validation", c.validation);
    get("stem_width", c.stem_width);
    get("widths", c.widths);
    get("blocks", c.blocks);
    get("hidden", c.hidden);
    get("lambda", c.lambda);
    get("alpha_mix", c.alpha_mix);
    get("max_depth", c.max_depth);
    get("min_leaf", c.min_leaf);
    get("n_trees", c.n_trees);
    get("emit_plots", c.emit_plots);
  } catch (const json::exception& e) {
    throw Error(Errc::Usage, std::string("malformed run config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return from_json(binio::read_file(path)); }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(to_json()); }

std::vector<VideoRecord> load_records(const RunConfig& config) {
  if (config.manifest.empty()) usage("a manifest is required");
  return load_manifest(config.manifest);
}

// ---------------------------------------------------------------------------
// Features

namespace {

std::optional<std::filesystem::path> cache_root(const RunConfig& c) {
  if (c.cache_dir.empty()) return std::nullopt;
  return std::filesystem::path(c.cache_dir);
}

std::vector<SampleWindow> windows_for(const RunConfig& c, const VideoRecord& r) {
  try {
    return schedule_windows(r.frame_count, c.windows_per_video, represent::kWindowLength, r.participant_id);
  } catch (const Error& e) {
    throw Error(e.code(), "participant " + r.participant_id + ": " + e.detail());
  }
}

std::vector<float> tamura_vector(const RunConfig& c, const VideoRecord& r) {
  const auto root = cache_root(c);
  std::filesystem::path path;
  if (root) {
    path = *root / r.participant_id / "tamura.ten";
    if (std::filesystem::exists(path)) return read_ten(path).data;
  }
  std::vector<float> v;
  try {
    v = tamura::video_feature_vector(r);
  } catch (const Error& e) {
    throw Error(e.code(), "participant " + r.participant_id + ": " + e.detail());
  }
  if (root) {
    std::filesystem::create_directories(path.parent_path());
    write_ten(path, TenArray{{static_cast<std::uint32_t>(v.size())}, v});
  }
  return v;
}

std::vector<double> participant_raw(const VideoRecord& r, bool include_concentration) {
  std::vector<double> v{r.features.age, r.features.bmi, r.features.abstinence};
  if (include_concentration) {
    if (!r.features.concentration) {
      throw Error(Errc::MissingConcentration, "participant " + r.participant_id + " has no concentration value");
    }
    v.push_back(*r.features.concentration);
  }
  return v;
}

std::vector<double> classical_row(const RunConfig& c, const VideoRecord& r) {
  std::vector<double> row;
  // zeror never looks at its inputs
  if (c.method == "zeror") return row;
  if (c.features != "participant") {
    for (float f : tamura_vector(c, r)) row.push_back(f);
  }
  if (c.features != "tamura") {
    const auto p = participant_raw(r, c.with_concentration);
    row.insert(row.end(), p.begin(), p.end());
  }
  return row;
}

eval::Triple triple(const MotilityTargets& t) { return {t.progressive, t.nonprogressive, t.immotile}; }

}  // namespace

ExtractSummary extract(const RunConfig& config, const std::vector<VideoRecord>& records) {
  config.validate();
  const auto root = cache_root(config);
  if (!root) usage("extract needs a cache directory");
  set_worker_count(config.workers);
  ExtractSummary s;
  const auto rep = config.representation();
  for (const auto& r : records) {
    ++s.videos;
    if (config.is_cnn()) {
      const auto windows = windows_for(config, r);
      for (std::size_t i = 0; i < windows.size(); ++i) {
        if (std::filesystem::exists(represent::cache_path(*root, r.participant_id, rep, static_cast<std::int64_t>(i)))) {
          ++s.cached;
        } else {
          ++s.computed;
        }
      }
      s.windows += static_cast<std::int64_t>(windows.size());
      represent::build_video_samples(r, rep, windows, root);
    } else if (config.features != "participant") {
      const bool present = std::filesystem::exists(*root / r.participant_id / "tamura.ten");
      ++(present ? s.cached : s.computed);
      ++s.windows;
      tamura_vector(config, r);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Neural helpers

namespace {

neural::NetworkSpec network_spec(const RunConfig& c, int participant_dim) {
  const auto rep = c.representation();
  const auto shape = rep.shape();
  neural::NetworkSpec spec =
      rep.two_stream() ? neural::desk_two_stream_spec(shape[0], shape[1], rep.motion_shape()->at(2), participant_dim)
                       : neural::desk_spec(shape[0], shape[1], shape[2], participant_dim);
  for (auto& t : spec.towers) {
    t.stem_width = c.stem_width;
    t.widths = c.widths;
    t.blocks = c.blocks;
  }
  spec.hidden = c.hidden;
  spec.validate();
  return spec;
}

int participant_dim(const RunConfig& c) {
  if (!c.with_participant_data) return 0;
  return c.with_concentration ? 4 : 3;
}

// Samples of a set of videos, either held in memory or read back from the
// cache on demand.
neural::SampleSet make_sample_set(const RunConfig& c, const std::vector<VideoRecord>& videos,
                                  const std::optional<represent::FoldStats>& stats) {
  const auto rep = c.representation();
  const auto root = cache_root(c);
  struct Ref {
    std::size_t video;
    std::int64_t window;
  };
  std::vector<Ref> refs;
  std::vector<std::vector<SampleWindow>> windows;
  std::vector<std::vector<float>> participant;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    windows.push_back(windows_for(c, videos[v]));
    for (std::size_t w = 0; w < windows.back().size(); ++w) refs.push_back({v, static_cast<std::int64_t>(w)});
    participant.push_back(stats ? represent::participant_vector(videos[v].features, *stats) : std::vector<float>{});
  }
  if (!root) {
    std::vector<represent::Sample> all;
    for (std::size_t v = 0; v < videos.size(); ++v) {
      auto samples = represent::build_video_samples(videos[v], rep, windows[v]);
      for (auto& s : samples) {
        s.participant = participant[v];
        all.push_back(std::move(s));
      }
    }
    return neural::SampleSet::from_vector(std::move(all));
  }
  for (std::size_t v = 0; v < videos.size(); ++v) represent::build_video_samples(videos[v], rep, windows[v], root);
  auto shared_videos = std::make_shared<std::vector<VideoRecord>>(videos);
  auto shared_windows = std::make_shared<std::vector<std::vector<SampleWindow>>>(std::move(windows));
  auto shared_participant = std::make_shared<std::vector<std::vector<float>>>(std::move(participant));
  auto shared_refs = std::make_shared<std::vector<Ref>>(std::move(refs));
  const std::size_t count = shared_refs->size();
  return neural::SampleSet::from_loader(count, [=](std::size_t i) {
    const Ref ref = (*shared_refs)[i];
    const auto& video = (*shared_videos)[ref.video];
    auto samples = represent::build_video_samples(
        video, rep, {(*shared_windows)[ref.video][static_cast<std::size_t>(ref.window)]}, root, ref.window);
    samples[0].participant = (*shared_participant)[ref.video];
    return std::move(samples[0]);
  });
}

std::optional<represent::FoldStats> fold_stats(const RunConfig& c, const std::vector<VideoRecord>& training) {
  if (!c.with_participant_data) return std::nullopt;
  std::vector<ParticipantFeatures> f;
  for (const auto& r : training) f.push_back(r.features);
  return represent::compute_fold_stats(f, c.with_concentration);
}

std::string checkpoint_metadata(const RunConfig& c, const std::optional<represent::FoldStats>& stats) {
  json j;
  j["rep"] = c.rep;
  j["stride"] = c.stride;
  j["with_participant_data"] = c.with_participant_data;
  j["with_concentration"] = c.with_concentration;
  if (stats) {
    j["participant_mean"] = stats->mean;
    j["participant_stddev"] = stats->stddev;
  }
  return j.dump();
}

struct FoldOutcome {
  std::vector<eval::Triple> sample_pred, sample_truth;
  std::vector<std::string> sample_ids;
  int train_samples = 0;
};

FoldOutcome run_cnn_fold(const RunConfig& c, const std::vector<VideoRecord>& training,
                         const std::vector<VideoRecord>& testing, int fold,
                         const std::optional<std::filesystem::path>& model_path) {
  const auto stats = fold_stats(c, training);
  const auto train_set = make_sample_set(c, training, stats);
  const auto test_set = make_sample_set(c, testing, stats);
  neural::Network<float> net(network_spec(c, participant_dim(c)), c.seed + static_cast<std::uint64_t>(fold));
  neural::Nadam<float> opt({c.lr, 0.9, 0.999, 1e-8});
  neural::TrainConfig tc;
  tc.batch_size = c.batch_size;
  tc.max_epochs = c.max_epochs;
  tc.patience = c.patience;
  tc.seed = c.seed + static_cast<std::uint64_t>(fold);
  tc.on_epoch = [fold](const neural::EpochRecord& r) {
    std::ostringstream s;
    s << "fold " << fold << " epoch " << r.epoch << ": train mse " << r.train_mse << ", val mse " << r.val_mse;
    log(LogLevel::Debug, s.str());
  };
  const auto result =
      neural::train(net, opt, train_set, c.validation == "test-fold" ? test_set : neural::SampleSet{}, tc);
  if (model_path) neural::save_checkpoint(*model_path, net, &opt, &result, checkpoint_metadata(c, stats));

  FoldOutcome out;
  out.train_samples = static_cast<int>(train_set.size());
  const auto pred = neural::predict(net, test_set, c.batch_size);
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto s = test_set.get(i);
    out.sample_pred.push_back(pred[i]);
    out.sample_truth.push_back(triple(s.targets));
    out.sample_ids.push_back(s.participant_id);
  }
  return out;
}

classical::Model fit_one(const RunConfig& c, const classical::Dataset2D& d) {
  if (c.method == "zeror") return classical::fit_zeror(d);
  if (c.method == "simple-linear") return classical::fit_simple_linear(d);
  if (c.method == "elastic-net") return classical::fit_elastic_net(d, {c.lambda, c.alpha_mix, 1000, 1e-6});
  if (c.method == "random-tree") return classical::fit_random_tree(d, {c.max_depth, c.min_leaf, 0, c.seed});
  return classical::fit_random_forest(d, {c.n_trees, c.max_depth, c.min_leaf, true, c.seed});
}

classical::Pipeline fit_classical(const RunConfig& c, const std::vector<VideoRecord>& training) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : training) rows.push_back(classical_row(c, r));
  const std::size_t d = rows.empty() ? 0 : rows[0].size();
  classical::Dataset2D data(training.size(), d);
  for (std::size_t i = 0; i < training.size(); ++i) {
    if (rows[i].size() != d) throw Error(Errc::ShapeMismatch, "participant " + training[i].participant_id + " has a feature vector of another length");
    std::copy(rows[i].begin(), rows[i].end(), data.x.begin() + static_cast<std::ptrdiff_t>(i * d));
    data.ids[i] = training[i].participant_id;
  }
  classical::Pipeline p;
  p.method = c.method;
  p.feature_set = c.features;
  p.include_concentration = c.with_concentration;
  p.standardizer = classical::Standardizer::fit(data);
  p.standardizer.apply(data);
  for (int k = 0; k < kTargetCount; ++k) {
    for (std::size_t i = 0; i < training.size(); ++i) data.y[i] = training[i].targets[k];
    p.models.push_back(fit_one(c, data));
  }
  return p;
}

eval::Triple classical_predict(const RunConfig& c, const classical::Pipeline& p, const VideoRecord& r) {
  const auto row = p.standardizer.apply(classical_row(c, r));
  return {p.models[0].predict(row), p.models[1].predict(row), p.models[2].predict(row)};
}

std::vector<VideoRecord> select(const std::vector<VideoRecord>& records, const std::vector<std::string>& ids) {
  std::map<std::string, const VideoRecord*> by_id;
  for (const auto& r : records) by_id[r.participant_id] = &r;
  std::vector<VideoRecord> out;
  for (const auto& id : ids) out.push_back(*by_id.at(id));
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) { binio::atomic_write(path, text); }

eval::FoldResult fold_result(int fold, int n_train, int n_test, const std::vector<eval::Triple>& video_pred,
                             const std::vector<eval::Triple>& video_truth, const std::vector<eval::Triple>& sample_pred,
                             const std::vector<eval::Triple>& sample_truth, int train_samples) {
  eval::FoldResult f;
  f.fold = fold;
  f.n_train = n_train;
  f.n_test = n_test;
  f.video = eval::mae(video_pred, video_truth);
  f.sample = eval::mae(sample_pred, sample_truth);
  f.train_samples = train_samples;
  f.test_samples = static_cast<int>(sample_pred.size());
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// Cross-validation

CvRun evaluate(const RunConfig& config, const std::vector<VideoRecord>& records) {
  config.validate();
  set_worker_count(config.workers);
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.participant_id);
  CvRun run;
  run.plan = eval::make_folds(ids, config.folds, config.seed);
  run.plan.check_partition(ids);

  const std::filesystem::path out_dir = config.output_dir;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir / "models");
    write_text(out_dir / "config.json", config.to_json());
    write_text(out_dir / "config.hash", hex64(config.hash()) + "\n");
  }

  eval::MethodReport method{config.method, {}};
  eval::MethodReport zeror{"zeror", {}};
  std::ostringstream predictions;
  predictions << "method,fold,participant_id,progressive,nonprogressive,immotile\n";
  auto emit = [&](const std::string& name, int fold, const std::string& id, const eval::Triple& p) {
    predictions << name << ',' << fold << ',' << id;
    for (double v : p) {
      std::ostringstream s;
      s.precision(17);
      s << v;
      predictions << ',' << s.str();
    }
    predictions << '\n';
  };

  for (int f = 0; f < run.plan.k; ++f) {
    const auto train_ids = run.plan.train_ids(f);
    const auto test_ids = run.plan.test_ids(f);
    {
      const std::set<std::string> train_set(train_ids.begin(), train_ids.end());
      const bool overlap = std::any_of(test_ids.begin(), test_ids.end(),
                                       [&](const std::string& id) { return train_set.count(id) > 0; });
      if (overlap) throw Error(Errc::FoldPlanMismatch, "participant leakage in fold " + std::to_string(f));
    }
    const auto training = select(records, train_ids);
    const auto testing = select(records, test_ids);
    info("fold " + std::to_string(f) + ": " + std::to_string(training.size()) + " training and " +
         std::to_string(testing.size()) + " test participants");

    std::vector<eval::Triple> truth;
    for (const auto& r : testing) truth.push_back(triple(r.targets));

    // Baseline on per-video targets.
    eval::Triple mean{};
    for (const auto& r : training)
      for (int k = 0; k < kTargetCount; ++k) mean[static_cast<std::size_t>(k)] += r.targets[k];
    for (double& v : mean) v /= static_cast<double>(training.size());
    const std::vector<eval::Triple> zero_pred(testing.size(), mean);
    for (const auto& r : testing) emit("zeror", f, r.participant_id, mean);

    if (config.is_cnn()) {
      std::optional<std::filesystem::path> model;
      if (!out_dir.empty()) model = out_dir / "models" / ("fold-" + std::to_string(f) + ".mnn");
      const auto outcome = run_cnn_fold(config, training, testing, f, model);
      const auto videos = eval::aggregate_per_video(outcome.sample_pred, outcome.sample_ids, test_ids);
      std::vector<eval::Triple> video_pred, video_truth;
      for (const auto& v : videos) {
        video_pred.push_back(v.value);
        video_truth.push_back(triple(select(records, {v.id})[0].targets));
        emit(config.method, f, v.id, v.value);
      }
      method.folds.push_back(fold_result(f, static_cast<int>(training.size()), static_cast<int>(testing.size()),
                                         video_pred, video_truth, outcome.sample_pred, outcome.sample_truth,
                                         outcome.train_samples));
      std::vector<eval::Triple> zero_samples(outcome.sample_truth.size(), mean);
      zeror.folds.push_back(fold_result(f, static_cast<int>(training.size()), static_cast<int>(testing.size()),
                                        zero_pred, truth, zero_samples, outcome.sample_truth,
                                        outcome.train_samples));
    } else {
      const auto p = fit_classical(config, training);
      if (!out_dir.empty()) p.save(out_dir / "models" / ("fold-" + std::to_string(f) + ".mcm"));
      std::vector<eval::Triple> pred;
      for (const auto& r : testing) {
        pred.push_back(classical_predict(config, p, r));
        emit(config.method, f, r.participant_id, pred.back());
      }
      const int n_train = static_cast<int>(training.size()), n_test = static_cast<int>(testing.size());
      method.folds.push_back(fold_result(f, n_train, n_test, pred, truth, pred, truth, n_train));
      zeror.folds.push_back(fold_result(f, n_train, n_test, zero_pred, truth, zero_pred, truth, n_train));
    }
  }

  run.reports = {method, zeror};
  run.verdict = eval::compare_to_zeror(method, zeror);

  if (!out_dir.empty()) {
    std::ostringstream csv, samples, table, folds;
    eval::write_report_csv(csv, run.reports);
    eval::write_report_csv(samples, run.reports, true);
    eval::write_report_table(table, run.reports);
    table << "corrected t-test against zeror: t = " << run.verdict->test.t << ", p = " << run.verdict->test.p
          << (run.verdict->significant ? " (significant)" : " (not significant)") << "\n";
    folds << "fold,participant_id\n";
    for (int f = 0; f < run.plan.k; ++f)
      for (const auto& id : run.plan.test_ids(f)) folds << f << ',' << id << '\n';
    write_text(out_dir / "report.csv", csv.str());
    write_text(out_dir / "report_samples.csv", samples.str());
    write_text(out_dir / "report.txt", table.str());
    write_text(out_dir / "folds.csv", folds.str());
    write_text(out_dir / "predictions.csv", predictions.str());
    if (config.emit_plots) {
      std::ostringstream plot;
      eval::write_plot_csv(plot, run.reports);
      write_text(out_dir / "plots.csv", plot.str());
    }
  }
  return run;
}

// ---------------------------------------------------------------------------
// Train / predict

std::filesystem::path train(const RunConfig& config, const std::vector<VideoRecord>& records) {
  config.validate();
  if (config.output_dir.empty()) usage("train needs an output directory");
  if (records.empty()) throw Error(Errc::EmptyDataset, "no videos to train on");
  set_worker_count(config.workers);
  const std::filesystem::path out_dir = config.output_dir;
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "config.json", config.to_json());
  write_text(out_dir / "config.hash", hex64(config.hash()) + "\n");
  if (!config.is_cnn()) {
    const auto path = out_dir / "model.mcm";
    fit_classical(config, records).save(path);
    return path;
  }
  const auto stats = fold_stats(config, records);
  const auto set = make_sample_set(config, records, stats);
  neural::Network<float> net(network_spec(config, participant_dim(config)), config.seed);
  neural::Nadam<float> opt({config.lr, 0.9, 0.999, 1e-8});
  neural::TrainConfig tc;
  tc.batch_size = config.batch_size;
  tc.max_epochs = config.max_epochs;
  tc.patience = config.patience;
  tc.seed = config.seed;
  const auto result = neural::train(net, opt, set, neural::SampleSet{}, tc);
  const auto path = out_dir / "model.mnn";
  neural::save_checkpoint(path, net, &opt, &result, checkpoint_metadata(config, stats));
  return path;
}

namespace {

eval::Triple clamp_triple(eval::Triple t) {
  for (double& v : t) v = std::clamp(v, 0.0, 100.0);
  return t;
}

}  // namespace

Prediction predict(const RunConfig& config, const std::filesystem::path& model, const VideoRecord& record) {
  config.validate();
  set_worker_count(config.workers);
  Prediction out;
  if (model.extension() == ".mcm") {
    const auto p = classical::Pipeline::load(model);
    RunConfig c = config;
    c.features = p.feature_set;
    c.with_concentration = p.include_concentration;
    out.raw = classical_predict(c, p, record);
    out.samples = 1;
    out.clamped = clamp_triple(out.raw);
    return out;
  }
  auto ck = neural::load_checkpoint(model);
  json meta;
  try {
    meta = json::parse(ck.metadata);
  } catch (const json::exception&) {
    throw Error(Errc::UnreadableCheckpoint, model.string() + ": metadata is not JSON");
  }
  RunConfig c = config;
  if (meta.contains("rep")) {
    const std::string rep = meta.at("rep").get<std::string>();
    const int stride = meta.value("stride", 1);
    if (rep != config.rep || stride != config.stride) {
      throw Error(Errc::ShapeMismatch, "model was trained on " + rep + " (stride " + std::to_string(stride) +
                                           "), run configured for " + config.rep + " (stride " +
                                           std::to_string(config.stride) + ")");
    }
    c.with_participant_data = meta.value("with_participant_data", false);
    c.with_concentration = meta.value("with_concentration", false);
  }
  std::optional<represent::FoldStats> stats;
  if (c.with_participant_data) {
    represent::FoldStats s;
    s.mean = meta.at("participant_mean").get<std::vector<double>>();
    s.stddev = meta.at("participant_stddev").get<std::vector<double>>();
    s.include_concentration = c.with_concentration;
    stats = s;
  }
  const auto rep = c.representation();
  const auto shape = rep.shape();
  const auto& tower = ck.network->spec().towers[0].input;
  if (tower[0] != shape[0] || tower[1] != shape[1] || tower[2] != shape[2]) {
    throw Error(Errc::ShapeMismatch, "model input does not match the " + c.rep + " representation");
  }
  const auto set = make_sample_set(c, {record}, stats);
  const auto pred = neural::predict(*ck.network, set, c.batch_size);
  std::vector<std::string> ids(pred.size(), record.participant_id);
  const auto agg = eval::aggregate_per_video(pred, ids);
  out.raw = agg.at(0).value;
  out.samples = agg.at(0).samples;
  out.clamped = clamp_triple(out.raw);
  return out;
}

bool verify(const std::filesystem::path& output_dir, std::string* message) {
  const auto text = binio::read_file(output_dir / "config.json");
  const auto config = RunConfig::from_json(text);
  std::string recorded = binio::read_file(output_dir / "config.hash");
  while (!recorded.empty() && std::isspace(static_cast<unsigned char>(recorded.back()))) recorded.pop_back();
  const std::string actual = hex64(config.hash());
  const bool verbatim = config.to_json() == text;
  const bool ok = recorded == actual && verbatim;
  if (message) {
    *message = "recorded " + recorded + ", recomputed " + actual + (verbatim ? "" : ", config.json is not canonical");
  }
  return ok;
}

}  // namespace motility::pipeline
