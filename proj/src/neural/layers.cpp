#include "motility/neural/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "motility/error.hpp"
#include "motility/parallel.hpp"
#include "motility/simd/kernels.hpp"

namespace motility::neural {

std::string Dims::str() const {
  return std::to_string(n) + "x" + std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
}

template <typename T>
bool Tensor4<T>::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(v); });
}

namespace {

struct SamePad {
  int out, before;
};

SamePad same_pad(int in, int kernel, int stride) {
  const int out = (in + stride - 1) / stride;
  const int total = std::max((out - 1) * stride + kernel - in, 0);
  return {out, total / 2};
}

[[noreturn]] void shape_error(const std::string& layer, const std::string& what) {
  throw Error(Errc::ShapeMismatch, layer + ": " + what);
}

template <typename T>
void transpose(const T* src, std::size_t rows, std::size_t cols, T* dst) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

template <typename T>
void he_fill(std::vector<T>& w, std::size_t fan_in, Rng& rng, double gain) {
  const double sd = gain * std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(1, fan_in)));
  for (auto& v : w) v = static_cast<T>(sd * rng.normal());
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride)
    : in_c_(in_channels), out_c_(out_channels), kernel_(kernel), stride_(stride),
      weight_(name + ".weight", static_cast<std::size_t>(out_channels) * kernel * kernel * in_channels),
      bias_(name + ".bias", static_cast<std::size_t>(out_channels)) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1) {
    throw Error(Errc::SpecShapeError, name + ": invalid convolution geometry");
  }
}

template <typename T>
typename Conv2d<T>::Geometry Conv2d<T>::geometry(const Dims& in) const {
  const auto y = same_pad(in.h, kernel_, stride_);
  const auto x = same_pad(in.w, kernel_, stride_);
  return {y.out, x.out, y.before, x.before};
}

template <typename T>
Dims Conv2d<T>::output_dims(const Dims& in) const {
  if (in.c != in_c_) {
    shape_error(weight_.name, "expects " + std::to_string(in_c_) + " channels, got " + in.str());
  }
  const auto g = geometry(in);
  return {in.n, g.oh, g.ow, out_c_};
}

template <typename T>
void Conv2d<T>::im2col(const T* image, const Dims& in, const Geometry& g, T* patches) const {
  const std::size_t k_len = static_cast<std::size_t>(kernel_) * kernel_ * in_c_;
  for (int oy = 0; oy < g.oh; ++oy) {
    for (int ox = 0; ox < g.ow; ++ox) {
      T* row = patches + (static_cast<std::size_t>(oy) * g.ow + ox) * k_len;
      for (int ky = 0; ky < kernel_; ++ky) {
        const int iy = oy * stride_ - g.pad_top + ky;
        for (int kx = 0; kx < kernel_; ++kx) {
          const int ix = ox * stride_ - g.pad_left + kx;
          T* dst = row + (static_cast<std::size_t>(ky) * kernel_ + kx) * in_c_;
          if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) {
            std::fill(dst, dst + in_c_, T(0));
          } else {
            const T* src = image + (static_cast<std::size_t>(iy) * in.w + ix) * in_c_;
            std::copy(src, src + in_c_, dst);
          }
        }
      }
    }
  }
}

template <typename T>
Tensor4<T> Conv2d<T>::forward(const Tensor4<T>& x, bool training) {
  const Dims od = output_dims(x.dims);
  const auto g = geometry(x.dims);
  Tensor4<T> out(od);
  const std::size_t k_len = static_cast<std::size_t>(kernel_) * kernel_ * in_c_;
  const std::size_t pixels = static_cast<std::size_t>(g.oh) * g.ow;
  const bool pointwise = kernel_ == 1 && stride_ == 1;
  parallel_for(static_cast<std::size_t>(x.dims.n), [&](std::size_t s) {
    const int n = static_cast<int>(s);
    std::vector<T> patches;
    const T* a = x.sample(n);
    if (!pointwise) {
      patches.resize(pixels * k_len);
      im2col(x.sample(n), x.dims, g, patches.data());
      a = patches.data();
    }
    T* o = out.sample(n);
    simd::gemm_nt(pixels, static_cast<std::size_t>(out_c_), k_len, a, k_len, weight_.value.data(), k_len, o,
                  static_cast<std::size_t>(out_c_), false);
    for (std::size_t p = 0; p < pixels; ++p)
      for (int c = 0; c < out_c_; ++c) o[p * out_c_ + c] += bias_.value[static_cast<std::size_t>(c)];
  });
  if (training) input_ = x;
  return out;
}

template <typename T>
Tensor4<T> Conv2d<T>::backward(const Tensor4<T>& dy) {
  const Dims in = input_.dims;
  const auto g = geometry(in);
  if (dy.dims != output_dims(in)) shape_error(weight_.name, "gradient shape " + dy.dims.str());
  Tensor4<T> dx(in);
  const std::size_t k_len = static_cast<std::size_t>(kernel_) * kernel_ * in_c_;
  const std::size_t pixels = static_cast<std::size_t>(g.oh) * g.ow;
  const auto oc = static_cast<std::size_t>(out_c_);

  std::vector<T> w_t(k_len * oc);
  transpose(weight_.value.data(), oc, k_len, w_t.data());
  std::vector<T> patches(pixels * k_len), patches_t(pixels * k_len), dy_t(pixels * oc), dpatch(pixels * k_len);
  for (int n = 0; n < in.n; ++n) {
    const T* d = dy.sample(n);
    im2col(input_.sample(n), in, g, patches.data());
    transpose(patches.data(), pixels, k_len, patches_t.data());
    transpose(d, pixels, oc, dy_t.data());
    simd::gemm_nt(oc, k_len, pixels, dy_t.data(), pixels, patches_t.data(), pixels, weight_.grad.data(), k_len,
                  true);
    for (std::size_t p = 0; p < pixels; ++p)
      for (std::size_t c = 0; c < oc; ++c) bias_.grad[c] += d[p * oc + c];

    simd::gemm_nt(pixels, k_len, oc, d, oc, w_t.data(), oc, dpatch.data(), k_len, false);
    T* dimg = dx.sample(n);
    for (int oy = 0; oy < g.oh; ++oy) {
      for (int ox = 0; ox < g.ow; ++ox) {
        const T* row = dpatch.data() + (static_cast<std::size_t>(oy) * g.ow + ox) * k_len;
        for (int ky = 0; ky < kernel_; ++ky) {
          const int iy = oy * stride_ - g.pad_top + ky;
          if (iy < 0 || iy >= in.h) continue;
          for (int kx = 0; kx < kernel_; ++kx) {
            const int ix = ox * stride_ - g.pad_left + kx;
            if (ix < 0 || ix >= in.w) continue;
            const T* src = row + (static_cast<std::size_t>(ky) * kernel_ + kx) * in_c_;
            T* dst = dimg + (static_cast<std::size_t>(iy) * in.w + ix) * in_c_;
            for (int c = 0; c < in_c_; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
  return dx;
}

template <typename T>
void Conv2d<T>::collect_params(std::vector<Param<T>*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

template <typename T>
void Conv2d<T>::init_he(Rng& rng, double gain) {
  he_fill(weight_.value, static_cast<std::size_t>(kernel_) * kernel_ * in_c_, rng, gain);
  std::fill(bias_.value.begin(), bias_.value.end(), T(0));
}

// ---------------------------------------------------------------------------
// BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(std::string name, int channels, double momentum, double eps)
    : name_(std::move(name)), channels_(channels), momentum_(momentum), eps_(eps),
      gamma_(name_ + ".gamma", static_cast<std::size_t>(channels)),
      beta_(name_ + ".beta", static_cast<std::size_t>(channels)),
      running_mean_(static_cast<std::size_t>(channels), T(0)),
      running_var_(static_cast<std::size_t>(channels), T(1)) {
  std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
}

template <typename T>
Dims BatchNorm<T>::output_dims(const Dims& in) const {
  if (in.c != channels_) shape_error(name_, "expects " + std::to_string(channels_) + " channels, got " + in.str());
  return in;
}

template <typename T>
Tensor4<T> BatchNorm<T>::forward(const Tensor4<T>& x, bool training) {
  output_dims(x.dims);
  const std::size_t c = static_cast<std::size_t>(channels_);
  const std::size_t count = x.data.size() / c;
  Tensor4<T> out(x.dims);
  std::vector<double> mean(c, 0.0), var(c, 0.0);
  if (training) {
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = 0; j < c; ++j) mean[j] += x.data[i * c + j];
    for (auto& m : mean) m /= static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = x.data[i * c + j] - mean[j];
        var[j] += d * d;
      }
    for (auto& v : var) v /= static_cast<double>(count);
    for (std::size_t j = 0; j < c; ++j) {
      running_mean_[j] = static_cast<T>(momentum_ * running_mean_[j] + (1.0 - momentum_) * mean[j]);
      running_var_[j] = static_cast<T>(momentum_ * running_var_[j] + (1.0 - momentum_) * var[j]);
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      mean[j] = running_mean_[j];
      var[j] = running_var_[j];
    }
  }
  inv_std_.assign(c, T(0));
  for (std::size_t j = 0; j < c; ++j) inv_std_[j] = static_cast<T>(1.0 / std::sqrt(var[j] + eps_));
  normalized_ = Tensor4<T>(x.dims);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const T xh = static_cast<T>((x.data[i * c + j] - mean[j]) * inv_std_[j]);
      normalized_.data[i * c + j] = xh;
      out.data[i * c + j] = gamma_.value[j] * xh + beta_.value[j];
    }
  }
  return out;
}

template <typename T>
Tensor4<T> BatchNorm<T>::backward(const Tensor4<T>& dy) {
  if (dy.dims != normalized_.dims) shape_error(name_, "gradient shape " + dy.dims.str());
  const std::size_t c = static_cast<std::size_t>(channels_);
  const std::size_t count = dy.data.size() / c;
  std::vector<double> sum_dy(c, 0.0), sum_dy_xh(c, 0.0);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      sum_dy[j] += dy.data[i * c + j];
      sum_dy_xh[j] += static_cast<double>(dy.data[i * c + j]) * normalized_.data[i * c + j];
    }
  for (std::size_t j = 0; j < c; ++j) {
    gamma_.grad[j] += static_cast<T>(sum_dy_xh[j]);
    beta_.grad[j] += static_cast<T>(sum_dy[j]);
  }
  Tensor4<T> dx(dy.dims);
  const double nc = static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double scale = gamma_.value[j] * inv_std_[j] / nc;
      dx.data[i * c + j] = static_cast<T>(
          scale * (nc * dy.data[i * c + j] - sum_dy[j] - normalized_.data[i * c + j] * sum_dy_xh[j]));
    }
  }
  return dx;
}

template <typename T>
void BatchNorm<T>::collect_params(std::vector<Param<T>*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

template <typename T>
void BatchNorm<T>::collect_buffers(std::vector<Buffer<T>>& out) {
  out.push_back({name_ + ".running_mean", &running_mean_});
  out.push_back({name_ + ".running_var", &running_var_});
}

// ---------------------------------------------------------------------------
// Relu

template <typename T>
Tensor4<T> Relu<T>::forward(const Tensor4<T>& x, bool) {
  Tensor4<T> out(x.dims);
  mask_.assign(x.data.size(), false);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    if (x.data[i] > T(0)) {
      out.data[i] = x.data[i];
      mask_[i] = true;
    }
  }
  return out;
}

template <typename T>
Tensor4<T> Relu<T>::backward(const Tensor4<T>& dy) {
  if (dy.data.size() != mask_.size()) shape_error("relu", "gradient shape " + dy.dims.str());
  Tensor4<T> dx(dy.dims);
  for (std::size_t i = 0; i < dy.data.size(); ++i) dx.data[i] = mask_[i] ? dy.data[i] : T(0);
  return dx;
}

// ---------------------------------------------------------------------------
// MaxPool

template <typename T>
Dims MaxPool<T>::output_dims(const Dims& in) const {
  if (in.h < 1 || in.w < 1) shape_error("maxpool", "empty input " + in.str());
  return {in.n, same_pad(in.h, kernel_, stride_).out, same_pad(in.w, kernel_, stride_).out, in.c};
}

template <typename T>
Tensor4<T> MaxPool<T>::forward(const Tensor4<T>& x, bool) {
  const Dims od = output_dims(x.dims);
  const auto py = same_pad(x.dims.h, kernel_, stride_);
  const auto px = same_pad(x.dims.w, kernel_, stride_);
  Tensor4<T> out(od);
  in_dims_ = x.dims;
  argmax_.assign(od.size(), 0);
  std::size_t o = 0;
  for (int n = 0; n < od.n; ++n) {
    for (int oy = 0; oy < od.h; ++oy) {
      for (int ox = 0; ox < od.w; ++ox) {
        for (int c = 0; c < od.c; ++c, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_index = 0;
          for (int ky = 0; ky < kernel_; ++ky) {
            const int iy = oy * stride_ - py.before + ky;
            if (iy < 0 || iy >= x.dims.h) continue;
            for (int kx = 0; kx < kernel_; ++kx) {
              const int ix = ox * stride_ - px.before + kx;
              if (ix < 0 || ix >= x.dims.w) continue;
              const std::size_t idx = ((static_cast<std::size_t>(n) * x.dims.h + iy) * x.dims.w + ix) * x.dims.c + c;
              if (x.data[idx] > best) {
                best = x.data[idx];
                best_index = idx;
              }
            }
          }
          out.data[o] = best;
          argmax_[o] = best_index;
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor4<T> MaxPool<T>::backward(const Tensor4<T>& dy) {
  if (dy.data.size() != argmax_.size()) shape_error("maxpool", "gradient shape " + dy.dims.str());
  Tensor4<T> dx(in_dims_);
  for (std::size_t o = 0; o < argmax_.size(); ++o) dx.data[argmax_[o]] += dy.data[o];
  return dx;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool

template <typename T>
Tensor4<T> GlobalAvgPool<T>::forward(const Tensor4<T>& x, bool) {
  in_dims_ = x.dims;
  Tensor4<T> out(output_dims(x.dims));
  const std::size_t plane = static_cast<std::size_t>(x.dims.h) * x.dims.w;
  const auto c = static_cast<std::size_t>(x.dims.c);
  for (int n = 0; n < x.dims.n; ++n) {
    const T* src = x.sample(n);
    std::vector<double> acc(c, 0.0);
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t j = 0; j < c; ++j) acc[j] += src[p * c + j];
    for (std::size_t j = 0; j < c; ++j) out.data[static_cast<std::size_t>(n) * c + j] = static_cast<T>(acc[j] / plane);
  }
  return out;
}

template <typename T>
Tensor4<T> GlobalAvgPool<T>::backward(const Tensor4<T>& dy) {
  if (dy.dims != output_dims(in_dims_)) shape_error("gap", "gradient shape " + dy.dims.str());
  Tensor4<T> dx(in_dims_);
  const std::size_t plane = static_cast<std::size_t>(in_dims_.h) * in_dims_.w;
  const auto c = static_cast<std::size_t>(in_dims_.c);
  const T inv = T(1) / static_cast<T>(plane);
  for (int n = 0; n < in_dims_.n; ++n) {
    T* dst = dx.sample(n);
    const T* g = dy.data.data() + static_cast<std::size_t>(n) * c;
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t j = 0; j < c; ++j) dst[p * c + j] = g[j] * inv;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Dense

template <typename T>
Dense<T>::Dense(std::string name, int in_features, int out_features)
    : in_(in_features), out_(out_features),
      weight_(name + ".weight", static_cast<std::size_t>(in_features) * out_features),
      bias_(name + ".bias", static_cast<std::size_t>(out_features)) {
  if (in_features < 1 || out_features < 1) throw Error(Errc::SpecShapeError, name + ": invalid dense size");
}

template <typename T>
Dims Dense<T>::output_dims(const Dims& in) const {
  if (in.per_sample() != static_cast<std::size_t>(in_)) {
    shape_error(weight_.name, "expects " + std::to_string(in_) + " features per sample, got " + in.str());
  }
  return {in.n, 1, 1, out_};
}

template <typename T>
Tensor4<T> Dense<T>::forward(const Tensor4<T>& x, bool training) {
  Tensor4<T> out(output_dims(x.dims));
  const auto n = static_cast<std::size_t>(x.dims.n);
  const auto o = static_cast<std::size_t>(out_);
  const auto i = static_cast<std::size_t>(in_);
  simd::gemm_nt(n, o, i, x.data.data(), i, weight_.value.data(), i, out.data.data(), o, false);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t j = 0; j < o; ++j) out.data[s * o + j] += bias_.value[j];
  if (training) input_ = x;
  return out;
}

template <typename T>
Tensor4<T> Dense<T>::backward(const Tensor4<T>& dy) {
  const auto n = static_cast<std::size_t>(input_.dims.n);
  const auto o = static_cast<std::size_t>(out_);
  const auto i = static_cast<std::size_t>(in_);
  if (dy.data.size() != n * o) shape_error(weight_.name, "gradient shape " + dy.dims.str());
  std::vector<T> dy_t(o * n), x_t(i * n), w_t(i * o);
  transpose(dy.data.data(), n, o, dy_t.data());
  transpose(input_.data.data(), n, i, x_t.data());
  simd::gemm_nt(o, i, n, dy_t.data(), n, x_t.data(), n, weight_.grad.data(), i, true);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t j = 0; j < o; ++j) bias_.grad[j] += dy.data[s * o + j];
  transpose(weight_.value.data(), o, i, w_t.data());
  Tensor4<T> dx(input_.dims);
  simd::gemm_nt(n, i, o, dy.data.data(), o, w_t.data(), o, dx.data.data(), i, false);
  return dx;
}

template <typename T>
void Dense<T>::collect_params(std::vector<Param<T>*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

template <typename T>
void Dense<T>::init_he(Rng& rng, double gain) {
  he_fill(weight_.value, static_cast<std::size_t>(in_), rng, gain);
  std::fill(bias_.value.begin(), bias_.value.end(), T(0));
}

// ---------------------------------------------------------------------------
// Sequential

template <typename T>
Dims Sequential<T>::output_dims(const Dims& in) const {
  Dims d = in;
  for (const auto& l : layers_) d = l->output_dims(d);
  return d;
}

template <typename T>
Tensor4<T> Sequential<T>::forward(const Tensor4<T>& x, bool training) {
  Tensor4<T> cur = x;
  for (auto& l : layers_) cur = l->forward(cur, training);
  return cur;
}

template <typename T>
Tensor4<T> Sequential<T>::backward(const Tensor4<T>& dy) {
  Tensor4<T> cur = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

template <typename T>
void Sequential<T>::collect_params(std::vector<Param<T>*>& out) {
  for (auto& l : layers_) l->collect_params(out);
}

template <typename T>
void Sequential<T>::collect_buffers(std::vector<Buffer<T>>& out) {
  for (auto& l : layers_) l->collect_buffers(out);
}

// ---------------------------------------------------------------------------
// ResidualBlock

template <typename T>
ResidualBlock<T>::ResidualBlock(const std::string& name, int in_channels, int out_channels, int stride)
    : conv1_(name + ".conv1", in_channels, out_channels, 3, stride), bn1_(name + ".bn1", out_channels),
      conv2_(name + ".conv2", out_channels, out_channels, 3, 1), bn2_(name + ".bn2", out_channels) {
  if (in_channels != out_channels || stride != 1) {
    proj_conv_ = std::make_unique<Conv2d<T>>(name + ".proj", in_channels, out_channels, 1, stride);
    proj_bn_ = std::make_unique<BatchNorm<T>>(name + ".proj_bn", out_channels);
  }
}

template <typename T>
Dims ResidualBlock<T>::output_dims(const Dims& in) const {
  const Dims main = bn2_.output_dims(conv2_.output_dims(bn1_.output_dims(conv1_.output_dims(in))));
  const Dims skip = proj_conv_ ? proj_bn_->output_dims(proj_conv_->output_dims(in)) : in;
  if (main != skip) shape_error("residual", "branch shapes " + main.str() + " and " + skip.str() + " differ");
  return main;
}

template <typename T>
Tensor4<T> ResidualBlock<T>::forward(const Tensor4<T>& x, bool training) {
  Tensor4<T> a = conv1_.forward(x, training);
  a = relu1_.forward(bn1_.forward(a, training), training);
  a = bn2_.forward(conv2_.forward(a, training), training);
  if (proj_conv_) {
    const Tensor4<T> s = proj_bn_->forward(proj_conv_->forward(x, training), training);
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += s.data[i];
  } else {
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += x.data[i];
  }
  return relu_out_.forward(a, training);
}

template <typename T>
Tensor4<T> ResidualBlock<T>::backward(const Tensor4<T>& dy) {
  const Tensor4<T> g = relu_out_.backward(dy);
  Tensor4<T> dx = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(g)))));
  if (proj_conv_) {
    const Tensor4<T> ds = proj_conv_->backward(proj_bn_->backward(g));
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += ds.data[i];
  } else {
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += g.data[i];
  }
  return dx;
}

template <typename T>
void ResidualBlock<T>::collect_params(std::vector<Param<T>*>& out) {
  conv1_.collect_params(out);
  bn1_.collect_params(out);
  conv2_.collect_params(out);
  bn2_.collect_params(out);
  if (proj_conv_) {
    proj_conv_->collect_params(out);
    proj_bn_->collect_params(out);
  }
}

template <typename T>
void ResidualBlock<T>::collect_buffers(std::vector<Buffer<T>>& out) {
  bn1_.collect_buffers(out);
  bn2_.collect_buffers(out);
  if (proj_bn_) proj_bn_->collect_buffers(out);
}

template <typename T>
void ResidualBlock<T>::init(Rng& rng) {
  conv1_.init_he(rng);
  conv2_.init_he(rng);
  if (proj_conv_) proj_conv_->init_he(rng);
}

template struct Tensor4<float>;
template struct Tensor4<double>;
template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class Relu<float>;
template class Relu<double>;
template class MaxPool<float>;
template class MaxPool<double>;
template class GlobalAvgPool<float>;
template class GlobalAvgPool<double>;
template class Dense<float>;
template class Dense<double>;
template class Sequential<float>;
template class Sequential<double>;
template class ResidualBlock<float>;
template class ResidualBlock<double>;

}  // namespace motility::neural
