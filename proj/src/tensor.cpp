#include "motility/tensor.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "motility/binary_io.hpp"
#include "motility/error.hpp"
#include "motility/tensor_io.hpp"

namespace motility {

FrameTensor::FrameTensor(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 0) {
    throw Error(Errc::ShapeMismatch, "negative tensor dimension");
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

FrameTensor::FrameTensor(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw Error(Errc::ShapeMismatch, "tensor data length does not match dimensions");
  }
}

bool FrameTensor::all_finite() const noexcept {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

FrameTensor concat_channels(std::span<const FrameTensor> parts) {
  if (parts.empty()) return {};
  const int h = parts[0].height();
  const int w = parts[0].width();
  int total = 0;
  for (const auto& p : parts) {
    if (p.height() != h || p.width() != w) {
      throw Error(Errc::ShapeMismatch, "concat_channels: spatial size differs");
    }
    total += p.channels();
  }
  FrameTensor out(h, w, total);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int offset = 0;
      for (const auto& p : parts) {
        for (int c = 0; c < p.channels(); ++c) out.at(y, x, offset + c) = p.at(y, x, c);
        offset += p.channels();
      }
    }
  }
  return out;
}

FrameTensor extract_channel(const FrameTensor& frame, int c) {
  if (c < 0 || c >= frame.channels()) throw Error(Errc::WrongChannelCount, "channel out of range");
  FrameTensor out(frame.height(), frame.width(), 1);
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) out.at(y, x) = frame.at(y, x, c);
  }
  return out;
}

namespace binio {

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::Io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace binio

std::size_t TenArray::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write_ten(const std::filesystem::path& path, const TenArray& array) {
  if (array.element_count() != array.data.size()) {
    throw Error(Errc::ShapeMismatch, "write_ten: dims do not match data length");
  }
  if (array.dims.size() > 255) throw Error(Errc::ShapeMismatch, "write_ten: rank too large");
  std::ostringstream out(std::ios::binary);
  binio::write_magic(out, "TEN1");
  binio::write_pod<std::uint8_t>(out, 0);
  binio::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(array.dims.size()));
  for (auto d : array.dims) binio::write_pod<std::uint32_t>(out, d);
  binio::write_array<float>(out, array.data);
  binio::atomic_write(path, out.str());
}

TenArray read_ten(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  if (!binio::read_magic(in, "TEN1")) throw Error(Errc::BadFormat, "not a TEN1 file: " + path.string());
  const auto dtype = binio::read_pod<std::uint8_t>(in);
  if (dtype != 0) throw Error(Errc::BadFormat, "unsupported .ten dtype " + std::to_string(dtype));
  const auto rank = binio::read_pod<std::uint8_t>(in);
  TenArray array;
  array.dims.resize(rank);
  for (auto& d : array.dims) d = binio::read_pod<std::uint32_t>(in);
  array.data.resize(array.element_count());
  binio::read_array<float>(in, array.data);
  return array;
}

void write_ten(const std::filesystem::path& path, const FrameTensor& frame) {
  TenArray array;
  array.dims = {static_cast<std::uint32_t>(frame.height()), static_cast<std::uint32_t>(frame.width()),
                static_cast<std::uint32_t>(frame.channels())};
  array.data.assign(frame.data().begin(), frame.data().end());
  write_ten(path, array);
}

FrameTensor read_ten_frame(const std::filesystem::path& path) {
  TenArray array = read_ten(path);
  if (array.dims.size() == 2) {
    return FrameTensor(static_cast<int>(array.dims[0]), static_cast<int>(array.dims[1]), 1,
                       std::move(array.data));
  }
  if (array.dims.size() == 3) {
    return FrameTensor(static_cast<int>(array.dims[0]), static_cast<int>(array.dims[1]),
                       static_cast<int>(array.dims[2]), std::move(array.data));
  }
  throw Error(Errc::BadFormat, "expected a rank-2 or rank-3 tensor in " + path.string());
}

}  // namespace motility
