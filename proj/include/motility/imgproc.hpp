#pragma once

#include <string>
#include <vector>

#include "motility/tensor.hpp"

namespace motility {

enum class NormalizeMode { Unit, Symmetric };

const char* normalize_mode_name(NormalizeMode mode);
NormalizeMode parse_normalize_mode(const std::string& name);

// Luma 0.299 R + 0.587 G + 0.114 B. Throws WrongChannelCount unless C = 3.
FrameTensor to_greyscale(const FrameTensor& frame);

// Greyscale for 1-channel (copy) or 3-channel input.
FrameTensor ensure_greyscale(const FrameTensor& frame);

// Replicates a single channel to three.
FrameTensor grey_to_rgb(const FrameTensor& frame);

// Pixel-center aligned bilinear resize, per channel, with clamped borders.
FrameTensor resize_bilinear(const FrameTensor& frame, int out_h, int out_w);

// unit: v / 255; symmetric: v / 127.5 - 1.
FrameTensor normalize(const FrameTensor& frame, NormalizeMode mode);

std::vector<float> flatten_row_major(const FrameTensor& frame);

// Separable Gaussian blur with replicated borders. A radius of 0 picks
// ceil(3 sigma).
FrameTensor gaussian_blur(const FrameTensor& frame, double sigma, int radius = 0);

// Bilinear sample of channel c at a sub-pixel position, borders replicated.
float sample_bilinear(const FrameTensor& frame, float x, float y, int c = 0);

}  // namespace motility
