#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tvsn/core/error.hpp"

namespace tvsn {

// Dense row-major H x W plane.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& operator()(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool same_size(const Grid& other) const { return height_ == other.height_ && width_ == other.width_; }
  bool operator==(const Grid&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

// Planar (channel-major) float image, values nominally in [0,1].
class Image {
 public:
  Image() = default;
  Image(int channels, int height, int width, float fill = 0.0f)
      : channels_(channels),
        height_(height),
        width_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {}

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }

  float& operator()(int c, int y, int x) { return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x]; }
  float operator()(int c, int y, int x) const {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_size(const Image& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  bool operator==(const Image&) const = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

}  // namespace tvsn
