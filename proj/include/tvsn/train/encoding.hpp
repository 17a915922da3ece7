#pragma once

#include <array>

namespace tvsn::train {

inline constexpr int kEncodingDim = 17;
inline constexpr double kEncodingStep = 20.0;

// Position k stands for a rotation of 20 * (k + 1) degrees. Angles between two
// positions split their weight linearly.
struct TransformEncoding {
  double theta = 0.0;
  std::array<float, kEncodingDim> t{};
};

// theta outside [20, 340] is a parameter error.
TransformEncoding encode_transform(double theta);
// Angle of the heaviest position.
double decode_transform(const std::array<float, kEncodingDim>& t);

}  // namespace tvsn::train
