#pragma once

#include <filesystem>

#include "tvsn/core/grid.hpp"

namespace tvsn {

// 8-bit PNG I/O. Float values are clamped to [0,1] and rounded to the nearest
// 1/255 step on write.
void write_png(const std::filesystem::path& path, const Image& image);
void write_png_mask(const std::filesystem::path& path, const Grid<float>& mask);
Image read_png(const std::filesystem::path& path);
Grid<float> read_png_mask(const std::filesystem::path& path);

inline float quantize_u8(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return static_cast<float>(static_cast<int>(c * 255.0f + 0.5f)) / 255.0f;
}

}  // namespace tvsn
