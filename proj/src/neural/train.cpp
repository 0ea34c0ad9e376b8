#include "motility/neural/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "motility/binary_io.hpp"
#include "motility/error.hpp"
#include "motility/log.hpp"
#include "motility/rng.hpp"
#include "motility/simd/kernels.hpp"

namespace motility::neural {

// ---------------------------------------------------------------------------
// Nadam

template <typename T>
void Nadam<T>::step(const std::vector<Param<T>*>& params) {
  for (const auto* p : params) {
    for (T g : p->grad) {
      if (!std::isfinite(g)) throw Error(Errc::NonFiniteGradient, "non-finite gradient in " + p->name);
    }
  }
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (const auto* p : params) {
      m_.emplace_back(p->value.size(), T(0));
      v_.emplace_back(p->value.size(), T(0));
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c_m = b1 / (1.0 - std::pow(b1, t + 1.0));
  const double c_g = (1.0 - b1) / (1.0 - std::pow(b1, t));
  const double c_v = 1.0 / (1.0 - std::pow(b2, t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param<T>& p = *params[k];
    if (m_[k].size() != p.value.size()) throw Error(Errc::ShapeMismatch, "optimizer state does not match " + p.name);
    if constexpr (std::is_same_v<T, float>) {
      const simd::NadamCoeffs coeffs{static_cast<float>(config_.lr), static_cast<float>(config_.eps),
                                     static_cast<float>(b1),         static_cast<float>(b2),
                                     static_cast<float>(c_m),        static_cast<float>(c_g),
                                     static_cast<float>(c_v)};
      simd::active().nadam(p.value.data(), p.grad.data(), m_[k].data(), v_[k].data(), p.value.size(), coeffs);
    } else {
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const T g = p.grad[i];
        m_[k][i] = b1 * m_[k][i] + (1.0 - b1) * g;
        v_[k][i] = b2 * v_[k][i] + (1.0 - b2) * g * g;
        p.value[i] -= config_.lr * (c_m * m_[k][i] + c_g * g) / (std::sqrt(c_v * v_[k][i]) + config_.eps);
      }
    }
  }
}

template <typename T>
void Nadam<T>::restore(std::int64_t steps, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v) {
  if (steps < 0 || m.size() != v.size()) throw Error(Errc::UnreadableCheckpoint, "inconsistent optimizer state");
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

template class Nadam<float>;
template class Nadam<double>;

// ---------------------------------------------------------------------------
// Samples and batches

SampleSet SampleSet::from_vector(std::vector<represent::Sample> samples) {
  SampleSet s;
  s.count_ = samples.size();
  s.owned_ = std::make_shared<const std::vector<represent::Sample>>(std::move(samples));
  return s;
}

SampleSet SampleSet::from_loader(std::size_t count, std::function<represent::Sample(std::size_t)> loader) {
  SampleSet s;
  s.count_ = count;
  s.loader_ = std::move(loader);
  return s;
}

represent::Sample SampleSet::get(std::size_t i) const {
  if (i >= count_) throw Error(Errc::UnknownId, "sample index " + std::to_string(i) + " out of range");
  return owned_ ? (*owned_)[i] : loader_(i);
}

namespace {

struct Batch {
  std::vector<Tensor4<float>> inputs;
  Tensor4<float> participant;
  std::vector<std::array<double, 3>> targets;
};

void copy_frame(const FrameTensor& f, const std::array<int, 3>& shape, Tensor4<float>& dst, int slot,
                const std::string& what) {
  if (f.height() != shape[0] || f.width() != shape[1] || f.channels() != shape[2]) {
    throw Error(Errc::ShapeMismatch, what + " is " + std::to_string(f.height()) + "x" + std::to_string(f.width()) +
                                         "x" + std::to_string(f.channels()) + ", network expects " +
                                         std::to_string(shape[0]) + "x" + std::to_string(shape[1]) + "x" +
                                         std::to_string(shape[2]));
  }
  std::copy(f.data().begin(), f.data().end(), dst.sample(slot));
}

Batch make_batch(const NetworkSpec& spec, const SampleSet& set, std::span<const std::size_t> indices) {
  const int n = static_cast<int>(indices.size());
  Batch b;
  for (const auto& t : spec.towers) b.inputs.emplace_back(Dims{n, t.input[0], t.input[1], t.input[2]});
  if (spec.participant_dim > 0) b.participant = Tensor4<float>({n, 1, 1, spec.participant_dim});
  b.targets.resize(indices.size());
  for (int s = 0; s < n; ++s) {
    const represent::Sample sample = set.get(indices[static_cast<std::size_t>(s)]);
    const std::string who = "sample " + sample.participant_id + "/" + std::to_string(sample.window_index);
    copy_frame(sample.input, spec.towers[0].input, b.inputs[0], s, who + " input");
    if (spec.towers.size() > 1) copy_frame(sample.motion, spec.towers[1].input, b.inputs[1], s, who + " motion input");
    if (spec.participant_dim > 0) {
      if (sample.participant.size() != static_cast<std::size_t>(spec.participant_dim)) {
        throw Error(Errc::ShapeMismatch, who + " has " + std::to_string(sample.participant.size()) +
                                             " participant values, network expects " +
                                             std::to_string(spec.participant_dim));
      }
      std::copy(sample.participant.begin(), sample.participant.end(), b.participant.sample(s));
    }
    for (int k = 0; k < 3; ++k) b.targets[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] = sample.targets[k];
  }
  return b;
}

template <typename Fn>
void for_each_batch(const NetworkSpec& spec, const SampleSet& set, std::span<const std::size_t> order, int batch_size,
                    Fn&& fn) {
  for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(batch_size)) {
    const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(batch_size));
    fn(make_batch(spec, set, order.subspan(lo, hi - lo)));
  }
}

struct Snapshot {
  std::vector<std::vector<float>> params;
  std::vector<std::vector<float>> buffers;
};

Snapshot take_snapshot(Network<float>& net) {
  Snapshot s;
  for (auto* p : net.params()) s.params.push_back(p->value);
  for (auto& b : net.buffers()) s.buffers.push_back(*b.values);
  return s;
}

void restore_snapshot(Network<float>& net, const Snapshot& s) {
  auto params = net.params();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = s.params[i];
  auto buffers = net.buffers();
  for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i].values = s.buffers[i];
}

}  // namespace

std::vector<std::array<double, 3>> predict(Network<float>& net, const SampleSet& samples, int batch_size) {
  if (net.spec().outputs != 3) throw Error(Errc::SpecShapeError, "prediction expects three outputs");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::array<double, 3>> out;
  out.reserve(samples.size());
  for_each_batch(net.spec(), samples, order, std::max(1, batch_size), [&](const Batch& b) {
    const auto y = net.forward(b.inputs, net.spec().participant_dim > 0 ? &b.participant : nullptr, false);
    for (int s = 0; s < y.dims.n; ++s) out.push_back({y.data[s * 3], y.data[s * 3 + 1], y.data[s * 3 + 2]});
  });
  return out;
}

Metrics evaluate(Network<float>& net, const SampleSet& samples, int batch_size) {
  Metrics m;
  if (samples.empty()) return m;
  const auto pred = predict(net, samples, batch_size);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto t = samples.get(i).targets;
    for (int k = 0; k < 3; ++k) {
      const double e = pred[i][static_cast<std::size_t>(k)] - t[k];
      m.mse += e * e;
      m.mae += std::abs(e);
    }
  }
  m.mse /= 3.0 * static_cast<double>(samples.size());
  m.mae /= 3.0 * static_cast<double>(samples.size());
  return m;
}

TrainResult train(Network<float>& net, Nadam<float>& optimizer, const SampleSet& training, const SampleSet& validation,
                  const TrainConfig& config) {
  if (training.empty()) throw Error(Errc::EmptyDataset, "no training samples");
  if (config.patience < 1 || config.batch_size < 1 || config.max_epochs < 1) {
    throw Error(Errc::Usage, "batch size, epochs and patience must be positive");
  }
  if (net.spec().outputs != 3) throw Error(Errc::SpecShapeError, "training expects three outputs");

  if (config.fit_output_affine) {
    std::array<double, 3> mean{}, sq{};
    for (std::size_t i = 0; i < training.size(); ++i) {
      const auto t = training.get(i).targets;
      for (int k = 0; k < 3; ++k) {
        mean[static_cast<std::size_t>(k)] += t[k];
        sq[static_cast<std::size_t>(k)] += t[k] * t[k];
      }
    }
    const double n = static_cast<double>(training.size());
    for (std::size_t k = 0; k < 3; ++k) {
      const double mu = mean[k] / n;
      const double sd = std::sqrt(std::max(0.0, sq[k] / n - mu * mu));
      net.output_shift[k] = static_cast<float>(mu);
      net.output_scale[k] = static_cast<float>(sd > 1e-6 ? sd : 1.0);
    }
  }

  Rng rng(config.seed);
  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto params = net.params();
  const bool fused = net.spec().participant_dim > 0;

  TrainResult result;
  Snapshot best;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double sse = 0.0, sae = 0.0;
    int batch_index = 0;
    for_each_batch(net.spec(), training, order, config.batch_size, [&](const Batch& b) {
      net.zero_grad();
      const auto y = net.forward(b.inputs, fused ? &b.participant : nullptr, true);
      Tensor4<float> grad(y.dims);
      const double scale = 2.0 / (3.0 * y.dims.n);
      double batch_sse = 0.0;
      for (int s = 0; s < y.dims.n; ++s) {
        for (int k = 0; k < 3; ++k) {
          const double e = y.data[s * 3 + k] - b.targets[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
          batch_sse += e * e;
          sae += std::abs(e);
          grad.data[s * 3 + k] = static_cast<float>(scale * e);
        }
      }
      if (!std::isfinite(batch_sse)) {
        throw Error(Errc::NonFiniteLoss, "loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                                             std::to_string(batch_index) + " after " +
                                             std::to_string(optimizer.steps()) + " optimizer steps");
      }
      sse += batch_sse;
      net.backward(grad);
      optimizer.step(params);
      ++batch_index;
    });
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = sse / (3.0 * static_cast<double>(training.size()));
    rec.train_mae = sae / (3.0 * static_cast<double>(training.size()));
    if (!validation.empty()) {
      const Metrics v = evaluate(net, validation, config.batch_size);
      rec.val_mse = v.mse;
      rec.val_mae = v.mae;
    }
    result.history.push_back(rec);
    if (config.on_epoch) config.on_epoch(rec);

    const double monitor = validation.empty() ? rec.train_mse : rec.val_mse;
    if (result.best_epoch < 0 || monitor < result.best_monitor) {
      result.best_epoch = epoch;
      result.best_monitor = monitor;
      best = take_snapshot(net);
    } else if (epoch - result.best_epoch >= config.patience) {
      info("early stop at epoch " + std::to_string(epoch) + ", best epoch " + std::to_string(result.best_epoch));
      break;
    }
  }
  restore_snapshot(net, best);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Network<float>& net, Nadam<float>* optimizer,
                     const TrainResult* result, const std::string& metadata) {
  std::ostringstream out;
  binio::write_magic(out, "MNN1");
  binio::write_pod<std::uint32_t>(out, kCheckpointVersion);
  binio::write_string(out, net.spec().to_json());
  binio::write_string(out, metadata);
  binio::write_floats(out, net.output_shift);
  binio::write_floats(out, net.output_scale);
  const auto params = net.params();
  binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    binio::write_string(out, p->name);
    binio::write_floats(out, p->value);
  }
  const auto buffers = net.buffers();
  binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(buffers.size()));
  for (const auto& b : buffers) {
    binio::write_string(out, b.name);
    binio::write_floats(out, *b.values);
  }
  binio::write_pod<std::uint8_t>(out, optimizer ? 1 : 0);
  if (optimizer) {
    const auto& c = optimizer->config();
    for (double v : {c.lr, c.beta1, c.beta2, c.eps}) binio::write_pod<double>(out, v);
    binio::write_pod<std::int64_t>(out, optimizer->steps());
    binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(optimizer->first_moments().size()));
    for (std::size_t i = 0; i < optimizer->first_moments().size(); ++i) {
      binio::write_floats(out, optimizer->first_moments()[i]);
      binio::write_floats(out, optimizer->second_moments()[i]);
    }
  }
  const std::vector<EpochRecord> empty;
  const auto& history = result ? result->history : empty;
  binio::write_pod<std::int32_t>(out, result ? result->best_epoch : -1);
  binio::write_pod<double>(out, result ? result->best_monitor : 0.0);
  binio::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(history.size()));
  for (const auto& r : history) {
    binio::write_pod<std::int32_t>(out, r.epoch);
    for (double v : {r.train_mse, r.train_mae, r.val_mse, r.val_mae}) binio::write_pod<double>(out, v);
  }
  binio::atomic_write(path, out.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = binio::read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::UnreadableCheckpoint, e.detail());
  }
  std::istringstream in(bytes);
  auto fail = [&](const std::string& what) -> Error {
    return Error(Errc::UnreadableCheckpoint, path.string() + ": " + what);
  };
  try {
    if (!binio::read_magic(in, "MNN1")) throw fail("not a network checkpoint");
    const auto version = binio::read_pod<std::uint32_t>(in);
    if (version != kCheckpointVersion) throw fail("unsupported version " + std::to_string(version));
    const NetworkSpec spec = NetworkSpec::from_json(binio::read_string(in));
    Checkpoint ck;
    ck.metadata = binio::read_string(in);
    ck.network = std::make_unique<Network<float>>(spec, 0);
    auto shift = binio::read_floats(in);
    auto scale = binio::read_floats(in);
    if (shift.size() != static_cast<std::size_t>(spec.outputs) || scale.size() != shift.size()) {
      throw fail("output affine has the wrong size");
    }
    ck.network->output_shift = std::move(shift);
    ck.network->output_scale = std::move(scale);
    auto params = ck.network->params();
    if (binio::read_pod<std::uint32_t>(in) != params.size()) throw fail("parameter count differs from the network layout");
    for (auto* p : params) {
      const auto name = binio::read_string(in);
      auto values = binio::read_floats(in);
      if (name != p->name || values.size() != p->value.size()) throw fail("parameter " + name + " does not match");
      p->value = std::move(values);
    }
    auto buffers = ck.network->buffers();
    if (binio::read_pod<std::uint32_t>(in) != buffers.size()) throw fail("buffer count differs from the network layout");
    for (auto& b : buffers) {
      const auto name = binio::read_string(in);
      auto values = binio::read_floats(in);
      if (name != b.name || values.size() != b.values->size()) throw fail("buffer " + name + " does not match");
      *b.values = std::move(values);
    }
    if (binio::read_pod<std::uint8_t>(in) != 0) {
      NadamConfig c;
      c.lr = binio::read_pod<double>(in);
      c.beta1 = binio::read_pod<double>(in);
      c.beta2 = binio::read_pod<double>(in);
      c.eps = binio::read_pod<double>(in);
      const auto steps = binio::read_pod<std::int64_t>(in);
      const auto count = binio::read_pod<std::uint32_t>(in);
      if (count != 0 && count != params.size()) throw fail("optimizer state does not match the parameters");
      std::vector<std::vector<float>> m, v;
      for (std::uint32_t i = 0; i < count; ++i) {
        m.push_back(binio::read_floats(in));
        v.push_back(binio::read_floats(in));
        if (m.back().size() != params[i]->value.size() || v.back().size() != params[i]->value.size()) {
          throw fail("optimizer moments do not match " + params[i]->name);
        }
      }
      ck.optimizer.emplace(c);
      ck.optimizer->restore(steps, std::move(m), std::move(v));
    }
    ck.result.best_epoch = binio::read_pod<std::int32_t>(in);
    ck.result.best_monitor = binio::read_pod<double>(in);
    const auto epochs = binio::read_pod<std::uint32_t>(in);
    if (epochs > 10'000'000) throw fail("implausible history length");
    for (std::uint32_t i = 0; i < epochs; ++i) {
      EpochRecord r;
      r.epoch = binio::read_pod<std::int32_t>(in);
      r.train_mse = binio::read_pod<double>(in);
      r.train_mae = binio::read_pod<double>(in);
      r.val_mse = binio::read_pod<double>(in);
      r.val_mae = binio::read_pod<double>(in);
      ck.result.history.push_back(r);
    }
    return ck;
  } catch (const Error& e) {
    if (e.code() == Errc::UnreadableCheckpoint) throw;
    throw fail(e.detail());
  }
}

}  // namespace motility::neural
