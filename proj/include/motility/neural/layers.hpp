#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "motility/neural/tensor4.hpp"
#include "motility/rng.hpp"

namespace motility::neural {

// Forward caches what backward needs; backward returns the input gradient
// and accumulates parameter gradients. Calls must alternate
// forward(training = true) / backward on the same batch.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  // ShapeMismatch when the input does not fit the layer.
  virtual Dims output_dims(const Dims& in) const = 0;
  virtual Tensor4<T> forward(const Tensor4<T>& x, bool training) = 0;
  virtual Tensor4<T> backward(const Tensor4<T>& dy) = 0;
  virtual void collect_params(std::vector<Param<T>*>&) {}
  virtual void collect_buffers(std::vector<Buffer<T>>&) {}
};

// "Same" padding: output side ceil(in / stride), padding split with the
// smaller half before. Cross-correlation, kernel laid out [out][ky][kx][in].
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride);
  std::string kind() const override { return "conv2d"; }
  Dims output_dims(const Dims& in) const override;
  Tensor4<T> forward(const Tensor4<T>& x, bool training) override;
  Tensor4<T> backward(const Tensor4<T>& dy) override;
  void collect_params(std::vector<Param<T>*>& out) override;

  void init_he(Rng& rng, double gain = 1.0);
  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }

 private:
  struct Geometry {
    int oh, ow, pad_top, pad_left;
  };
  Geometry geometry(const Dims& in) const;
  void im2col(const T* image, const Dims& in, const Geometry& g, T* patches) const;

  int in_c_, out_c_, kernel_, stride_;
  Param<T> weight_, bias_;
  Tensor4<T> input_;
};

template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  BatchNorm(std::string name, int channels, double momentum = 0.9, double eps = 1e-5);
  std::string kind() const override { return "batchnorm"; }
  Dims output_dims(const Dims& in) const override;
  Tensor4<T> forward(const Tensor4<T>& x, bool training) override;
  Tensor4<T> backward(const Tensor4<T>& dy) override;
  void collect_params(std::vector<Param<T>*>& out) override;
  void collect_buffers(std::vector<Buffer<T>>& out) override;

  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }
  std::vector<T>& running_mean() { return running_mean_; }
  std::vector<T>& running_var() { return running_var_; }

 private:
  std::string name_;
  int channels_;
  double momentum_, eps_;
  Param<T> gamma_, beta_;
  std::vector<T> running_mean_, running_var_;
  Tensor4<T> normalized_;
  std::vector<T> inv_std_;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  std::string kind() const override { return "relu"; }
  Dims output_dims(const Dims& in) const override { return in; }
  Tensor4<T> forward(const Tensor4<T>& x, bool training) override;
  Tensor4<T> backward(const Tensor4<T>& dy) override;

 private:
  std::vector<bool> mask_;
};

// Max pooling with "same" padding; padded cells never win.
template <typename T>
class MaxPool final : public Layer<T> {
 public:
  MaxPool(int kernel = 3, int stride = 2) : kernel_(kernel), stride_(stride) {}
  std::string kind() const override { return "maxpool"; }
  Dims output_dims(const Dims& in) const override;
  Tensor4<T> forward(const Tensor4<T>& x, bool training) override;
  Tensor4<T> backward(const Tensor4<T>& dy) override;

 private:
  int kernel_, stride_;
  Dims in_dims_;
  std::vector<std::size_t> argmax_;
};

// n x h x w x c -> n x 1 x 1 x c
template <typename T>
class GlobalAvgPool final : public Layer<T> {
 public:
  std::string kind() const override { return "gap"; }
  Dims output_dims(const Dims& in) const override { return {in.n, 1, 1, in.c}; }
  Tensor4<T> forward(const Tensor4<T>& x, bool training) override;
  Tensor4<T> backward(const Tensor4<T>& dy) override;

 private:
  Dims in_dims_;
};

// Fully connected on the flattened per-sample input; output n x 1 x 1 x out.
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::string name, int in_features, int out_features);
  std::string kind() const override { return "dense"; }
  Dims output_dims(const Dims& in) const override;
  Tensor4<T> forward(const Tensor4<T>& x, bool training) override;
  Tensor4<T> backward(const Tensor4<T>& dy) override;
  void collect_params(std::vector<Param<T>*>& out) override;

  void init_he(Rng& rng, double gain = 1.0);
  Param<T>& weight() { return weight_; }  // [out][in]
  Param<T>& bias() { return bias_; }
  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_, out_;
  Param<T> weight_, bias_;
  Tensor4<T> input_;
};

template <typename T>
class Sequential : public Layer<T> {
 public:
  std::string kind() const override { return "sequential"; }
  Dims output_dims(const Dims& in) const override;
  Tensor4<T> forward(const Tensor4<T>& x, bool training) override;
  Tensor4<T> backward(const Tensor4<T>& dy) override;
  void collect_params(std::vector<Param<T>*>& out) override;
  void collect_buffers(std::vector<Buffer<T>>& out) override;

  template <typename L>
  L& add(std::unique_ptr<L> layer) {
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }
  std::size_t size() const { return layers_.size(); }
  Layer<T>& at(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// relu(bn(conv3x3(relu(bn(conv3x3 stride s (x))))) + shortcut(x)), the
// shortcut being identity or bn(conv1x1 stride s) when the shape changes.
template <typename T>
class ResidualBlock final : public Layer<T> {
 public:
  ResidualBlock(const std::string& name, int in_channels, int out_channels, int stride);
  std::string kind() const override { return "residual"; }
  Dims output_dims(const Dims& in) const override;
  Tensor4<T> forward(const Tensor4<T>& x, bool training) override;
  Tensor4<T> backward(const Tensor4<T>& dy) override;
  void collect_params(std::vector<Param<T>*>& out) override;
  void collect_buffers(std::vector<Buffer<T>>& out) override;

  void init(Rng& rng);
  bool has_projection() const { return static_cast<bool>(proj_conv_); }

 private:
  Conv2d<T> conv1_;
  BatchNorm<T> bn1_;
  Relu<T> relu1_;
  Conv2d<T> conv2_;
  BatchNorm<T> bn2_;
  std::unique_ptr<Conv2d<T>> proj_conv_;
  std::unique_ptr<BatchNorm<T>> proj_bn_;
  Relu<T> relu_out_;
};

}  // namespace motility::neural
