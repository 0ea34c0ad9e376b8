#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace motility {

// H x W x C image or representation, row-major, channel-last.
class FrameTensor {
 public:
  FrameTensor() = default;
  FrameTensor(int height, int width, int channels, float fill = 0.0f);
  FrameTensor(int height, int width, int channels, std::vector<float> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int y, int x, int c = 0) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int y, int x, int c = 0) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  std::vector<float>& storage() noexcept { return data_; }

  bool same_shape(const FrameTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool all_finite() const noexcept;

  friend bool operator==(const FrameTensor&, const FrameTensor&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Concatenates tensors of equal height/width along the channel axis.
FrameTensor concat_channels(std::span<const FrameTensor> parts);

// Returns channel `c` as a single-channel tensor.
FrameTensor extract_channel(const FrameTensor& frame, int c);

}  // namespace motility
