#include "motility/neural/network.hpp"

#include "json.hpp"

#include "motility/error.hpp"

namespace motility::neural {

namespace {

[[noreturn]] void spec_error(const std::string& what) { throw Error(Errc::SpecShapeError, what); }

}  // namespace

void NetworkSpec::validate() const {
  if (towers.empty() || towers.size() > 2) spec_error("a network has one or two towers");
  for (std::size_t t = 0; t < towers.size(); ++t) {
    const auto& tw = towers[t];
    const std::string where = "tower " + std::to_string(t) + ": ";
    if (tw.input[0] < 1 || tw.input[1] < 1 || tw.input[2] < 1) spec_error(where + "input dimensions must be positive");
    if (tw.stem_width < 1 || tw.stem_kernel < 1 || tw.stem_stride < 1) spec_error(where + "invalid stem");
    if (tw.widths.size() != tw.blocks.size()) spec_error(where + "widths and blocks differ in length");
    for (std::size_t s = 0; s < tw.widths.size(); ++s) {
      if (tw.widths[s] < 1 || tw.blocks[s] < 1) spec_error(where + "stage " + std::to_string(s) + " is empty");
    }
  }
  if (participant_dim < 0) spec_error("participant_dim must be non-negative");
  for (int h : hidden) {
    if (h < 1) spec_error("hidden layer widths must be positive");
  }
  if (outputs < 1) spec_error("outputs must be positive");
}

int NetworkSpec::head_input_width() const {
  int w = participant_dim;
  for (const auto& t : towers) w += t.feature_width();
  return w;
}

std::string NetworkSpec::to_json() const {
  nlohmann::json j;
  j["participant_dim"] = participant_dim;
  j["hidden"] = hidden;
  j["outputs"] = outputs;
  j["towers"] = nlohmann::json::array();
  for (const auto& t : towers) {
    j["towers"].push_back({{"input", t.input},
                           {"stem_width", t.stem_width},
                           {"stem_kernel", t.stem_kernel},
                           {"stem_stride", t.stem_stride},
                           {"stem_pool", t.stem_pool},
                           {"widths", t.widths},
                           {"blocks", t.blocks}});
  }
  return j.dump();
}

NetworkSpec NetworkSpec::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    NetworkSpec s;
    s.participant_dim = j.at("participant_dim").get<int>();
    s.hidden = j.at("hidden").get<std::vector<int>>();
    s.outputs = j.at("outputs").get<int>();
    s.towers.clear();
    for (const auto& t : j.at("towers")) {
      TowerSpec tw;
      tw.input = t.at("input").get<std::array<int, 3>>();
      tw.stem_width = t.at("stem_width").get<int>();
      tw.stem_kernel = t.at("stem_kernel").get<int>();
      tw.stem_stride = t.at("stem_stride").get<int>();
      tw.stem_pool = t.at("stem_pool").get<bool>();
      tw.widths = t.at("widths").get<std::vector<int>>();
      tw.blocks = t.at("blocks").get<std::vector<int>>();
      s.towers.push_back(tw);
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    spec_error(std::string("malformed network spec: ") + e.what());
  }
}

NetworkSpec desk_spec(int height, int width, int channels, int participant_dim) {
  NetworkSpec s;
  s.towers[0].input = {height, width, channels};
  s.participant_dim = participant_dim;
  s.validate();
  return s;
}

NetworkSpec desk_two_stream_spec(int height, int width, int motion_channels, int participant_dim) {
  NetworkSpec s;
  s.towers[0].input = {height, width, 3};
  TowerSpec motion;
  motion.input = {height, width, motion_channels};
  s.towers.push_back(motion);
  s.participant_dim = participant_dim;
  s.validate();
  return s;
}

template <typename T>
Network<T>::Network(const NetworkSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  Rng rng(seed);
  for (std::size_t t = 0; t < spec_.towers.size(); ++t) {
    const auto& tw = spec_.towers[t];
    const std::string prefix = "tower" + std::to_string(t);
    auto seq = std::make_unique<Sequential<T>>();
    auto& stem = seq->add(std::make_unique<Conv2d<T>>(prefix + ".stem", tw.input[2], tw.stem_width, tw.stem_kernel,
                                                      tw.stem_stride));
    stem.init_he(rng);
    seq->add(std::make_unique<BatchNorm<T>>(prefix + ".stem_bn", tw.stem_width));
    seq->add(std::make_unique<Relu<T>>());
    if (tw.stem_pool) seq->add(std::make_unique<MaxPool<T>>(3, 2));
    int channels = tw.stem_width;
    for (std::size_t s = 0; s < tw.widths.size(); ++s) {
      for (int b = 0; b < tw.blocks[s]; ++b) {
        const int stride = (s > 0 && b == 0) ? 2 : 1;
        auto& block = seq->add(std::make_unique<ResidualBlock<T>>(
            prefix + ".stage" + std::to_string(s) + ".block" + std::to_string(b), channels, tw.widths[s], stride));
        block.init(rng);
        channels = tw.widths[s];
      }
    }
    seq->add(std::make_unique<GlobalAvgPool<T>>());
    const Dims out = seq->output_dims({1, tw.input[0], tw.input[1], tw.input[2]});
    if (out.c != tw.feature_width()) spec_error(prefix + ": feature width does not match the last stage");
    tower_widths_.push_back(out.c);
    towers_.push_back(std::move(seq));
  }
  int in = spec_.head_input_width();
  for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
    head_layers_.push_back(std::make_unique<Dense<T>>("head.fc" + std::to_string(i), in, spec_.hidden[i]));
    head_layers_.back()->init_he(rng);
    head_relus_.push_back(std::make_unique<Relu<T>>());
    in = spec_.hidden[i];
  }
  head_layers_.push_back(std::make_unique<Dense<T>>("head.out", in, spec_.outputs));
  head_layers_.back()->init_he(rng, 0.1);
  output_shift.assign(static_cast<std::size_t>(spec_.outputs), T(0));
  output_scale.assign(static_cast<std::size_t>(spec_.outputs), T(1));
}

template <typename T>
Tensor4<T> Network<T>::forward(const std::vector<Tensor4<T>>& inputs, const Tensor4<T>* participant,
                               bool training) {
  if (inputs.size() != towers_.size()) {
    throw Error(Errc::ShapeMismatch, "network expects " + std::to_string(towers_.size()) + " inputs, got " +
                                         std::to_string(inputs.size()));
  }
  const int n = inputs[0].dims.n;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto& in = spec_.towers[t].input;
    const Dims d = inputs[t].dims;
    if (d.n != n || d.h != in[0] || d.w != in[1] || d.c != in[2]) {
      throw Error(Errc::ShapeMismatch, "tower " + std::to_string(t) + " expects " + std::to_string(in[0]) + "x" +
                                           std::to_string(in[1]) + "x" + std::to_string(in[2]) + " inputs, got " +
                                           d.str());
    }
  }
  if (spec_.participant_dim > 0) {
    if (!participant || participant->dims.n != n ||
        participant->dims.per_sample() != static_cast<std::size_t>(spec_.participant_dim)) {
      throw Error(Errc::ShapeMismatch, "network expects a participant vector of width " +
                                           std::to_string(spec_.participant_dim));
    }
  }
  batch_ = n;
  const int width = spec_.head_input_width();
  Tensor4<T> features({n, 1, 1, width});
  int offset = 0;
  for (std::size_t t = 0; t < towers_.size(); ++t) {
    const Tensor4<T> f = towers_[t]->forward(inputs[t], training);
    const int w = tower_widths_[t];
    for (int s = 0; s < n; ++s)
      for (int j = 0; j < w; ++j) features.data[static_cast<std::size_t>(s) * width + offset + j] = f.data[static_cast<std::size_t>(s) * w + j];
    offset += w;
  }
  for (int s = 0; s < n && spec_.participant_dim > 0; ++s)
    for (int j = 0; j < spec_.participant_dim; ++j)
      features.data[static_cast<std::size_t>(s) * width + offset + j] =
          participant->data[static_cast<std::size_t>(s) * spec_.participant_dim + j];

  Tensor4<T> h = features;
  for (std::size_t i = 0; i < head_relus_.size(); ++i) {
    h = head_relus_[i]->forward(head_layers_[i]->forward(h, training), training);
  }
  Tensor4<T> out = head_layers_.back()->forward(h, training);
  const auto k = static_cast<std::size_t>(spec_.outputs);
  for (std::size_t s = 0; s < static_cast<std::size_t>(n); ++s)
    for (std::size_t j = 0; j < k; ++j) out.data[s * k + j] = output_shift[j] + output_scale[j] * out.data[s * k + j];
  return out;
}

template <typename T>
void Network<T>::backward(const Tensor4<T>& dprediction) {
  const auto k = static_cast<std::size_t>(spec_.outputs);
  Tensor4<T> g = dprediction;
  if (g.data.size() != static_cast<std::size_t>(batch_) * k) {
    throw Error(Errc::ShapeMismatch, "prediction gradient has shape " + g.dims.str());
  }
  for (std::size_t s = 0; s < static_cast<std::size_t>(batch_); ++s)
    for (std::size_t j = 0; j < k; ++j) g.data[s * k + j] *= output_scale[j];
  g = head_layers_.back()->backward(g);
  for (std::size_t i = head_relus_.size(); i-- > 0;) g = head_layers_[i]->backward(head_relus_[i]->backward(g));

  const int width = spec_.head_input_width();
  input_grads_.clear();
  int offset = 0;
  for (std::size_t t = 0; t < towers_.size(); ++t) {
    const int w = tower_widths_[t];
    Tensor4<T> part({batch_, 1, 1, w});
    for (int s = 0; s < batch_; ++s)
      for (int j = 0; j < w; ++j) part.data[static_cast<std::size_t>(s) * w + j] = g.data[static_cast<std::size_t>(s) * width + offset + j];
    input_grads_.push_back(towers_[t]->backward(part));
    offset += w;
  }
}

template <typename T>
std::vector<Param<T>*> Network<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& t : towers_) t->collect_params(out);
  for (auto& l : head_layers_) l->collect_params(out);
  return out;
}

template <typename T>
std::vector<Buffer<T>> Network<T>::buffers() {
  std::vector<Buffer<T>> out;
  for (auto& t : towers_) t->collect_buffers(out);
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() {
  std::size_t n = 0;
  for (auto* p : params()) n += p->value.size();
  return n;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto* p : params()) std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template class Network<float>;
template class Network<double>;

}  // namespace motility::neural
