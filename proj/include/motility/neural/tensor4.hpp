#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace motility::neural {

struct Dims {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w) *
           static_cast<std::size_t>(c);
  }
  std::size_t per_sample() const { return static_cast<std::size_t>(h) * w * c; }
  std::string str() const;
  friend bool operator==(const Dims&, const Dims&) = default;
};

// Batch of NHWC feature maps.
template <typename T>
struct Tensor4 {
  Dims dims;
  std::vector<T> data;

  Tensor4() = default;
  explicit Tensor4(Dims d, T fill = T(0)) : dims(d), data(d.size(), fill) {}

  T& at(int n, int y, int x, int c) { return data[index(n, y, x, c)]; }
  T at(int n, int y, int x, int c) const { return data[index(n, y, x, c)]; }
  T* sample(int n) { return data.data() + static_cast<std::size_t>(n) * dims.per_sample(); }
  const T* sample(int n) const { return data.data() + static_cast<std::size_t>(n) * dims.per_sample(); }

  bool all_finite() const;

 private:
  std::size_t index(int n, int y, int x, int c) const {
    return ((static_cast<std::size_t>(n) * dims.h + y) * dims.w + x) * dims.c + c;
  }
};

template <typename T>
struct Param {
  std::string name;
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  Param(std::string n, std::size_t size) : name(std::move(n)), value(size, T(0)), grad(size, T(0)) {}
};

// Non-trainable state saved with a model (batch-norm running statistics).
template <typename T>
struct Buffer {
  std::string name;
  std::vector<T>* values;
};

}  // namespace motility::neural
