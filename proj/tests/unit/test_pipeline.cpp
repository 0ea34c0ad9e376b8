#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "motility/binary_io.hpp"
#include "motility/error.hpp"
#include "motility/log.hpp"
#include "motility/neural/train.hpp"
#include "motility/pipeline.hpp"
#include "motility/synth.hpp"

using namespace motility;
using namespace motility::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("motility_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small dot dataset, written once per process.
const std::vector<VideoRecord>& tiny_dataset() {
  static const std::vector<VideoRecord> records = [] {
    const auto dir = fresh_dir("dataset");
    synth::DatasetParams p;
    p.videos = 9;
    p.width = 64;
    p.height = 64;
    p.frames = 40;
    p.dots = 10;
    return synth::write_dot_dataset(dir, p);
  }();
  return records;
}

fs::path tiny_manifest() { return fs::temp_directory_path() / "motility_pipeline_dataset" / "manifest.csv"; }

RunConfig small_cnn(const std::string& rep) {
  RunConfig c;
  c.rep = rep;
  c.windows_per_video = 2;
  c.max_epochs = 2;
  c.patience = 1;
  c.batch_size = 4;
  c.stem_width = 4;
  c.widths = {4};
  c.blocks = {1};
  c.hidden = {8};
  return c;
}

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::Usage;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MOTILITY_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("run config JSON round trip and hash") {
  RunConfig c = small_cnn("dense");
  c.manifest = "/data/m.csv";
  c.with_participant_data = true;
  c.seed = 12345678901234ULL;
  const auto text = c.to_json();
  CHECK(RunConfig::from_json(text) == c);
  CHECK(RunConfig::from_json(text).to_json() == text);
  CHECK(text.back() == '\n');
  CHECK(c.hash() == fnv1a64(text));
  RunConfig d = c;
  d.lr = 0.001;
  CHECK(d.hash() != c.hash());
  CHECK(hex64(0xabcULL) == "0000000000000abc");
  // FNV-1a 64 reference values.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("run config validation") {
  RunConfig c;
  c.method = "svm";
  CHECK(error_of([&] { c.validate(); }) == Errc::Usage);
  c = RunConfig{};
  c.stride = 5;
  CHECK(error_of([&] { c.validate(); }) == Errc::Usage);
  c = RunConfig{};
  c.rep = "optical";
  CHECK(error_of([&] { c.validate(); }) == Errc::Usage);
  c = RunConfig{};
  c.with_concentration = true;
  CHECK(error_of([&] { c.validate(); }) == Errc::Usage);
  CHECK_NOTHROW(RunConfig{}.validate());
}

TEST_CASE("extract caches and a second run recomputes nothing") {
  const auto& recs = tiny_dataset();
  RunConfig c = small_cnn("greystack");
  c.cache_dir = fresh_dir("extract").string();
  const auto first = extract(c, recs);
  CHECK(first.videos == 9);
  CHECK(first.windows == 18);
  CHECK(first.computed == 18);
  const auto second = extract(c, recs);
  CHECK(second.windows == 18);
  CHECK(second.computed == 0);
  CHECK(second.cached == 18);
}

TEST_CASE("extract names the participant with a missing frame source") {
  auto recs = tiny_dataset();
  recs[3].frame_source = "/nonexistent/video.y8seq";
  RunConfig c = small_cnn("single");
  c.cache_dir = fresh_dir("missing").string();
  try {
    extract(c, recs);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(recs[3].participant_id) != std::string::npos);
  }
}

TEST_CASE("zeror method row equals the baseline row") {
  RunConfig c;
  c.method = "zeror";
  c.output_dir = fresh_dir("zeror").string();
  const auto run = evaluate(c, tiny_dataset());
  REQUIRE(run.reports.size() == 2);
  for (int t = 0; t < 3; ++t) CHECK(run.reports[0].mean_per_target()[t] == run.reports[1].mean_per_target()[t]);
  CHECK(run.reports[0].average() == run.reports[1].average());
  for (const char* f : {"config.json", "config.hash", "report.csv", "report_samples.csv", "report.txt",
                        "folds.csv", "predictions.csv"}) {
    CHECK(fs::exists(fs::path(c.output_dir) / f));
  }
  CHECK_FALSE(fs::exists(fs::path(c.output_dir) / "plots.csv"));
  CHECK(verify(c.output_dir));
}

TEST_CASE("verify detects an edited config") {
  RunConfig c;
  c.method = "zeror";
  c.emit_plots = true;
  c.output_dir = fresh_dir("verify").string();
  evaluate(c, tiny_dataset());
  CHECK(fs::exists(fs::path(c.output_dir) / "plots.csv"));
  std::string message;
  CHECK(verify(c.output_dir, &message));
  auto text = binio::read_file(fs::path(c.output_dir) / "config.json");
  text.replace(text.find("\"seed\": 1"), 9, "\"seed\": 2");
  binio::atomic_write(fs::path(c.output_dir) / "config.json", text);
  CHECK_FALSE(verify(c.output_dir, &message));
}

TEST_CASE("classical runs are reproducible byte for byte") {
  RunConfig c;
  c.method = "random-forest";
  c.features = "participant";
  c.with_participant_data = true;
  c.n_trees = 10;
  c.min_leaf = 2;
  c.output_dir = fresh_dir("forest_a").string();
  evaluate(c, tiny_dataset());
  const auto a = binio::read_file(fs::path(c.output_dir) / "report.csv");
  c.output_dir = fresh_dir("forest_b").string();
  evaluate(c, tiny_dataset());
  CHECK(binio::read_file(fs::path(c.output_dir) / "report.csv") == a);
}

TEST_CASE("fusion with concentration needs the concentration column") {
  auto recs = tiny_dataset();
  for (auto& r : recs) r.features.concentration.reset();
  RunConfig c = small_cnn("single");
  c.with_participant_data = true;
  c.with_concentration = true;
  CHECK(error_of([&] { evaluate(c, recs); }) == Errc::MissingConcentration);
  RunConfig k;
  k.method = "simple-linear";
  k.features = "participant";
  k.with_participant_data = true;
  k.with_concentration = true;
  CHECK(error_of([&] { evaluate(k, recs); }) == Errc::MissingConcentration);
}

TEST_CASE("predict with a zero final layer and repeat calls") {
  const auto dir = fresh_dir("predict");
  RunConfig c = small_cnn("single");
  auto spec = neural::desk_spec(224, 224, 3);
  spec.towers[0].stem_width = 4;
  spec.towers[0].widths = {4};
  spec.towers[0].blocks = {1};
  spec.hidden = {8};
  neural::Network<float> net(spec, 3);
  auto& w = net.final_layer().weight().value;
  auto& b = net.final_layer().bias().value;
  std::fill(w.begin(), w.end(), 0.0f);
  std::fill(b.begin(), b.end(), 0.0f);
  const auto model = dir / "model.mnn";
  neural::save_checkpoint(model, net, nullptr, nullptr, R"({"rep":"single","stride":1})");

  const auto& rec = tiny_dataset()[0];
  const auto p = predict(c, model, rec);
  CHECK(p.samples == 2);
  for (int t = 0; t < 3; ++t) {
    CHECK(p.raw[t] == 0.0);
    CHECK(p.clamped[t] == 0.0);
  }

  // Non-trivial weights: repeated predictions agree exactly.
  neural::Network<float> live(spec, 4);
  live.output_shift = {30.0f, 20.0f, 50.0f};
  neural::save_checkpoint(dir / "live.mnn", live, nullptr, nullptr, R"({"rep":"single","stride":1})");
  const auto q1 = predict(c, dir / "live.mnn", rec);
  const auto q2 = predict(c, dir / "live.mnn", rec);
  CHECK(q1.raw == q2.raw);
  for (int t = 0; t < 3; ++t) {
    CHECK(q1.clamped[t] >= 0.0);
    CHECK(q1.clamped[t] <= 100.0);
  }

  RunConfig other = c;
  other.rep = "dense";
  CHECK(error_of([&] { predict(other, model, rec); }) == Errc::ShapeMismatch);

  std::ofstream(dir / "junk.mnn") << "not a checkpoint";
  CHECK(error_of([&] { predict(c, dir / "junk.mnn", rec); }) == Errc::UnreadableCheckpoint);
}

TEST_CASE("train then predict round trip") {
  const auto dir = fresh_dir("train");
  RunConfig c = small_cnn("single");
  c.manifest = tiny_manifest().string();
  c.output_dir = dir.string();
  const auto model = train(c, tiny_dataset());
  CHECK(model.filename() == "model.mnn");
  CHECK(fs::exists(dir / "config.json"));
  const auto p = predict(c, model, tiny_dataset()[1]);
  CHECK(p.samples == 2);
  for (double v : p.raw) CHECK(std::isfinite(v));

  RunConfig k;
  k.method = "simple-linear";
  k.features = "participant";
  k.with_participant_data = true;
  k.output_dir = (dir / "classical").string();
  const auto cm = train(k, tiny_dataset());
  CHECK(cm.filename() == "model.mcm");
  const auto pk = predict(k, cm, tiny_dataset()[2]);
  CHECK(pk.samples == 1);
}

TEST_CASE("cli exit codes") {
  tiny_dataset();
  const auto dir = fresh_dir("cli");
  const std::string manifest = tiny_manifest().string();
  CHECK(run_cli("") == 1);
  CHECK(run_cli("evaluate --no-such-flag") == 1);
  CHECK(run_cli("evaluate --method zeror --manifest /nonexistent/m.csv") == 2);
  CHECK(run_cli("evaluate --method zeror --stride 3 --manifest " + manifest) == 1);
  CHECK(run_cli("evaluate --method bogus --manifest " + manifest) == 1);
  CHECK(run_cli("prepare --manifest " + manifest) == 0);
  const std::string out = (dir / "run").string();
  CHECK(run_cli("evaluate --method zeror --manifest " + manifest + " --out " + out) == 0);
  CHECK(run_cli("verify " + out) == 0);
  CHECK(run_cli("verify --rerun " + out) == 0);
  CHECK(run_cli("report " + out + " --emit-plots " + (dir / "plots.csv").string()) == 0);
  CHECK(fs::exists(dir / "plots.csv"));
  CHECK(run_cli("predict --model " + (dir / "none.mnn").string() + " --video synth-000 --manifest " + manifest) == 2);
  CHECK(run_cli("synth " + (dir / "ds").string() + " --videos 3 --frames 30 --width 32 --height 32") == 0);
  CHECK(fs::exists(dir / "ds" / "manifest.csv"));

  // Flags override values loaded from --config.
  const std::string out2 = (dir / "run2").string();
  CHECK(run_cli("evaluate --config " + out + "/config.json --out " + out2 + " --seed 5") == 0);
  const auto c2 = RunConfig::load(fs::path(out2) / "config.json");
  CHECK(c2.seed == 5);
  CHECK(c2.method == "zeror");
}
