#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "motility/neural/layers.hpp"

namespace motility::neural {

struct TowerSpec {
  std::array<int, 3> input{224, 224, 3};  // H, W, C
  int stem_width = 8;
  int stem_kernel = 7;
  int stem_stride = 2;
  bool stem_pool = true;
  std::vector<int> widths{8, 16, 32, 64};  // one stage per entry, stride 2 from the second on
  std::vector<int> blocks{2, 2, 2, 2};

  int feature_width() const { return widths.empty() ? stem_width : widths.back(); }
  friend bool operator==(const TowerSpec&, const TowerSpec&) = default;
};

// One tower, or two for the two-stream variant, followed by the regression
// head: [GAP features | participant] -> FC -> ReLU -> ... -> FC(outputs).
struct NetworkSpec {
  std::vector<TowerSpec> towers{TowerSpec{}};
  int participant_dim = 0;
  std::vector<int> hidden{2048, 2048};
  int outputs = 3;

  // SpecShapeError on any inconsistency.
  void validate() const;
  int head_input_width() const;
  std::string to_json() const;
  static NetworkSpec from_json(const std::string& text);
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Desk-scale single-tower network for an H x W x C input.
NetworkSpec desk_spec(int height, int width, int channels, int participant_dim = 0);
// Two-stream variant: raw frame tower plus motion tower.
NetworkSpec desk_two_stream_spec(int height, int width, int motion_channels, int participant_dim = 0);

template <typename T>
class Network {
 public:
  Network(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }

  // inputs: one batch per tower; participant: n x 1 x 1 x participant_dim
  // (ignored without fusion). Returns n x 1 x 1 x outputs, after the fixed
  // output affine (prediction = shift + scale * raw).
  Tensor4<T> forward(const std::vector<Tensor4<T>>& inputs, const Tensor4<T>* participant, bool training);
  // Accumulates parameter gradients for d loss / d prediction.
  void backward(const Tensor4<T>& dprediction);
  // Gradient with respect to each tower input from the last backward call.
  const std::vector<Tensor4<T>>& input_gradients() const { return input_grads_; }

  std::vector<Param<T>*> params();
  std::vector<Buffer<T>> buffers();
  std::size_t parameter_count();
  void zero_grad();

  // Per-output affine applied after the last layer; not trained.
  std::vector<T> output_shift;
  std::vector<T> output_scale;

  Dense<T>& final_layer() { return *head_layers_.back(); }

 private:
  NetworkSpec spec_;
  std::vector<std::unique_ptr<Sequential<T>>> towers_;
  std::vector<std::unique_ptr<Dense<T>>> head_layers_;
  std::vector<std::unique_ptr<Relu<T>>> head_relus_;
  std::vector<int> tower_widths_;
  std::vector<Tensor4<T>> input_grads_;
  int batch_ = 0;
};

}  // namespace motility::neural
