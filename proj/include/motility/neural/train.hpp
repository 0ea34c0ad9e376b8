#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "motility/neural/network.hpp"
#include "motility/represent.hpp"

namespace motility::neural {

struct NadamConfig {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Nadam with a constant momentum schedule. `step` is the number of updates
// applied so far.
template <typename T>
class Nadam {
 public:
  explicit Nadam(NadamConfig config = {}) : config_(config) {}

  // NonFiniteGradient before touching any parameter when a gradient is NaN/inf.
  void step(const std::vector<Param<T>*>& params);

  const NadamConfig& config() const { return config_; }
  std::int64_t steps() const { return steps_; }
  std::vector<std::vector<T>>& first_moments() { return m_; }
  std::vector<std::vector<T>>& second_moments() { return v_; }
  void restore(std::int64_t steps, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v);

 private:
  NadamConfig config_;
  std::int64_t steps_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

// Samples either held in memory or produced on demand (e.g. from a cache).
class SampleSet {
 public:
  SampleSet() = default;
  static SampleSet from_vector(std::vector<represent::Sample> samples);
  static SampleSet from_loader(std::size_t count, std::function<represent::Sample(std::size_t)> loader);

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  represent::Sample get(std::size_t i) const;

 private:
  std::size_t count_ = 0;
  std::shared_ptr<const std::vector<represent::Sample>> owned_;
  std::function<represent::Sample(std::size_t)> loader_;
};

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0.0;
  double train_mae = 0.0;
  double val_mse = 0.0;
  double val_mae = 0.0;
};

struct TrainConfig {
  int batch_size = 16;
  int max_epochs = 200;
  int patience = 20;
  std::uint64_t seed = 1;
  NadamConfig optimizer;
  // Sets the network's output affine to the training target mean and
  // standard deviation before the first epoch.
  bool fit_output_affine = true;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_monitor = 0.0;  // validation MSE, or training MSE without a validation set
};

// Minimizes MSE over the three targets; restores the parameters of the
// epoch with the lowest validation MSE and stops after `patience` epochs
// without improvement. NonFiniteLoss aborts with the epoch and batch.
TrainResult train(Network<float>& net, Nadam<float>& optimizer, const SampleSet& training,
                  const SampleSet& validation, const TrainConfig& config);

// Inference-mode predictions, one row of `outputs` per sample.
std::vector<std::array<double, 3>> predict(Network<float>& net, const SampleSet& samples, int batch_size = 16);

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
};
Metrics evaluate(Network<float>& net, const SampleSet& samples, int batch_size = 16);

// "MNN1" container: network spec, output affine, parameters, batch-norm
// statistics, optional optimizer state and training history, plus a free
// JSON metadata string.
struct Checkpoint {
  std::unique_ptr<Network<float>> network;
  std::optional<Nadam<float>> optimizer;
  TrainResult result;
  std::string metadata;
};

void save_checkpoint(const std::filesystem::path& path, Network<float>& net, Nadam<float>* optimizer,
                     const TrainResult* result, const std::string& metadata = "{}");
// UnreadableCheckpoint on any format or consistency problem.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace motility::neural
