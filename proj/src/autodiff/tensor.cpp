#include "tvsn/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "tvsn/core/error.hpp"

namespace tvsn::ad {

Shape::Shape(std::initializer_list<int> dims) : Shape(std::vector<int>(dims)) {}

Shape::Shape(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() > 4) fail(ErrorKind::Shape, "tensors have at most 4 dims, got " + std::to_string(dims_.size()));
  for (int d : dims_) {
    if (d < 0) fail(ErrorKind::Shape, "negative dimension in shape");
  }
}

std::size_t Shape::numel() const {
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                         [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

std::string Shape::str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i > 0) s += "x";
    s += std::to_string(dims_[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)), values_(shape_.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : Tensor(std::move(shape), FloatBuffer(values.begin(), values.end())) {}

Tensor::Tensor(Shape shape, FloatBuffer values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_.numel()) {
    fail(ErrorKind::Shape, "value count " + std::to_string(values_.size()) + " does not match shape " + shape_.str());
  }
}

float Tensor::item() const {
  if (values_.size() != 1) fail(ErrorKind::Shape, "item() needs a single-element tensor, got " + shape_.str());
  return values_[0];
}

void Tensor::fill(float v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape.numel() != numel()) fail(ErrorKind::Shape, "cannot reshape " + shape_.str() + " to " + shape.str());
  return Tensor(std::move(shape), values_);
}

Tensor Tensor::normal(Shape shape, std::mt19937_64& rng, float stddev) {
  Tensor t(std::move(shape));
  std::normal_distribution<float> dist(0.0f, stddev);
  for (auto& v : t.values_) v = dist(rng);
  return t;
}

Tensor Tensor::uniform(Shape shape, std::mt19937_64& rng, float lo, float hi) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<float> dist(lo, hi);
  for (auto& v : t.values_) v = dist(rng);
  return t;
}

}  // namespace tvsn::ad
