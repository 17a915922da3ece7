#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tvsn::ad {

// Vectorized reductions peel leading elements by pointer alignment, so float
// buffers share one fixed alignment to keep results independent of the heap.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kAlign})); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, std::align_val_t{kAlign}); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

// Up to 4 dims; images are (batch, channel, height, width).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int> dims);
  explicit Shape(std::vector<int> dims);

  int rank() const { return static_cast<int>(dims_.size()); }
  int operator[](int i) const { return dims_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& dims() const { return dims_; }
  std::size_t numel() const;
  std::string str() const;
  bool operator==(const Shape&) const = default;

 private:
  std::vector<int> dims_;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);
  Tensor(Shape shape, FloatBuffer values);

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  float* data() { return values_.data(); }
  const float* data() const { return values_.data(); }
  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }
  FloatBuffer& storage() { return values_; }
  const FloatBuffer& storage() const { return values_; }

  float& operator[](std::size_t i) { return values_[i]; }
  float operator[](std::size_t i) const { return values_[i]; }

  float item() const;
  void fill(float v);
  bool all_finite() const;
  Tensor reshaped(Shape shape) const;

  static Tensor normal(Shape shape, std::mt19937_64& rng, float stddev);
  static Tensor uniform(Shape shape, std::mt19937_64& rng, float lo, float hi);

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  FloatBuffer values_;
};

}  // namespace tvsn::ad
