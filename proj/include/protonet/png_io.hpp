#pragma once

#include <string>

#include "protonet/image.hpp"

namespace protonet {

// Decodes an 8-bit grayscale or RGB PNG into [0,1] intensities. Palette,
// 16-bit and alpha variants are expanded/stripped on read.
Image read_png(const std::string& path);

// Writes a single plane as 8-bit grayscale PNG; values clamped to [0,1].
void write_png_gray(const std::string& path, const Plane& plane);

}  // namespace protonet
