#pragma once

#include <utility>
#include <vector>

#include "tvsn/autodiff/graph.hpp"

namespace tvsn::ad {

// Cross-correlation with zero padding. x: (N,Cin,H,W), w: (Cout,Cin,k,k),
// b: (Cout) or an invalid Var for no bias. Output (N,Cout,(H+2p-k)/s+1,...).
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);

// Adjoint of conv2d. x: (N,Cin,H,W), w: (Cin,Cout,k,k), output spatial size
// (H-1)*s - 2p + k.
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride, int pad);

// x: (N,In), w: (Out,In), b: (Out).
Var linear(const Var& x, const Var& w, const Var& b);

// source: (N,C,H,W); flow: (N,2,Ho,Wo) holding continuous (row, col) source
// pixel coordinates. Differentiable in both arguments.
Var bilinear_sample(const Var& source, const Var& flow);

enum class Pointwise { Relu, LeakyRelu, Sigmoid, Tanh };
inline constexpr float kLeakySlope = 0.2f;
Var pointwise(Pointwise kind, const Var& x);
inline Var relu(const Var& x) { return pointwise(Pointwise::Relu, x); }
inline Var leaky_relu(const Var& x) { return pointwise(Pointwise::LeakyRelu, x); }
inline Var sigmoid(const Var& x) { return pointwise(Pointwise::Sigmoid, x); }
inline Var tanh(const Var& x) { return pointwise(Pointwise::Tanh, x); }

inline constexpr float kNormEps = 1e-5f;
// Per (sample, channel) normalization with learned per-channel gain and bias.
Var instance_norm(const Var& x, const Var& gain, const Var& bias);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// image (N,C,H,W) times mask (N,1,H,W), broadcast over channels.
Var mul_mask(const Var& image, const Var& mask);
// scale * x + shift
Var affine(const Var& x, float scale, float shift);
// Concatenation along axis 1 (channels for images, features for matrices).
Var concat(const std::vector<Var>& parts);
Var reshape(const Var& x, Shape shape);
Var sum(const Var& x);
Var mean(const Var& x);

// Size-normalized losses, all returning a scalar of shape [1].
Var l1_loss(const Var& a, const Var& b);     // mean |a - b|
Var feature_l2(const Var& a, const Var& b);  // mean (a - b)^2
// mean over elements of the logistic loss; `labels` is treated as constant.
Var bce_with_logits(const Var& logits, const Var& labels);
// mean |horizontal differences| + mean |vertical differences|
Var tv_loss(const Var& image);
// logits (N,K); mean negative log-likelihood of `labels`.
Var softmax_cross_entropy(const Var& logits, const std::vector<int>& labels);
// sum_i w_i * term_i over scalar terms.
Var weighted_sum(const std::vector<std::pair<float, Var>>& terms);

}  // namespace tvsn::ad
