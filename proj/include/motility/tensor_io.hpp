#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "motility/tensor.hpp"

namespace motility {

// `.ten` container: "TEN1", u8 dtype (0 = f32), u8 rank, u32 dims, f32 data.
struct TenArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

void write_ten(const std::filesystem::path& path, const TenArray& array);
TenArray read_ten(const std::filesystem::path& path);

void write_ten(const std::filesystem::path& path, const FrameTensor& frame);
// Accepts rank-2 (H x W, one channel) or rank-3 (H x W x C) arrays.
FrameTensor read_ten_frame(const std::filesystem::path& path);

}  // namespace motility
