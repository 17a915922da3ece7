#include "tvsn/train/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tvsn/core/error.hpp"

namespace tvsn::train {

TransformEncoding encode_transform(double theta) {
  constexpr double lo = kEncodingStep;
  constexpr double hi = kEncodingStep * kEncodingDim;
  if (!std::isfinite(theta) || theta < lo || theta > hi) {
    fail(ErrorKind::Parameter, "theta " + std::to_string(theta) + " outside the valid range [20, 340] degrees");
  }
  TransformEncoding e;
  e.theta = theta;
  const double q = theta / kEncodingStep;
  const int i = std::min(static_cast<int>(std::floor(q)), kEncodingDim);
  const double ti = 1.0 - (theta - i * kEncodingStep) / kEncodingStep;
  e.t[static_cast<std::size_t>(i - 1)] = static_cast<float>(ti);
  if (i < kEncodingDim) e.t[static_cast<std::size_t>(i)] = static_cast<float>(1.0 - ti);
  return e;
}

double decode_transform(const std::array<float, kEncodingDim>& t) {
  const auto it = std::max_element(t.begin(), t.end());
  return kEncodingStep * static_cast<double>(std::distance(t.begin(), it) + 1);
}

}  // namespace tvsn::train
