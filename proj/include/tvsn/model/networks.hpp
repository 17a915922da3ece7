#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tvsn/autodiff/graph.hpp"
#include "tvsn/model/arch.hpp"

namespace tvsn::model {

using ad::Graph;
using ad::ParameterStore;
using ad::Var;

// Parameter name prefixes.
inline constexpr const char* kDoafn = "doafn.";
inline constexpr const char* kCompletion = "completion.";
inline constexpr const char* kDiscriminator = "disc.";
inline constexpr const char* kPerceptual = "perceptual.";
inline constexpr const char* kPerceptualHead = "perceptual_head.";
inline constexpr const char* kBaseline = "baseline.";

void init_doafn(ParameterStore& store, const ArchDescriptor& arch, std::mt19937_64& rng);
void init_completion(ParameterStore& store, const ArchDescriptor& arch, std::mt19937_64& rng);
void init_discriminator(ParameterStore& store, const ArchDescriptor& arch, std::mt19937_64& rng);
void init_perceptual(ParameterStore& store, const ArchDescriptor& arch, std::mt19937_64& rng);
void init_baseline(ParameterStore& store, const ArchDescriptor& arch, std::mt19937_64& rng);

struct DoafnOutput {
  Var flow_raw;   // (N,2,H,W) in [-1,1]
  Var flow;       // (N,2,H,W) source (row, col) pixel coordinates
  Var vis_logit;  // (N,1,H,W)
  Var vis;        // sigmoid(vis_logit)
  Var bg_logit;   // (N,1,H,W), only with predict_background
  Var afn;        // source warped by flow
  Var i_doafn;    // I_s * M_bg + afn * vis * (1 - M_bg)
  Var bottleneck; // (N, bottleneck)
};

// `bg` is the (N,1,H,W) background mask used for compositing. When it is not
// valid the third head must be enabled and its sigmoid is used instead.
// With `track` false all parameters enter as constants.
DoafnOutput doafn_forward(Graph& g, ParameterStore& store, const ArchDescriptor& arch, const Var& source,
                          const Var& encoding, const Var& bg, bool track = true);

// Hourglass over i_doafn with skips and the DOAFN bottleneck injected at the
// centre. Output (N,3,H,W) in (0,1).
Var completion_forward(Graph& g, ParameterStore& store, const ArchDescriptor& arch, const Var& i_doafn,
                       const Var& doafn_bottleneck, bool track = true);

struct DiscriminatorOutput {
  Var logit;               // (N,1)
  std::vector<Var> taps;   // after blocks 1..3
};
DiscriminatorOutput discriminator_forward(Graph& g, ParameterStore& store, const ArchDescriptor& arch,
                                          const Var& image, bool track = true);

// Three block activations of the (frozen) perceptual network.
std::vector<Var> perceptual_features(Graph& g, ParameterStore& store, const ArchDescriptor& arch, const Var& image,
                                     bool track = false);
// Classifier logits (N, perc_classes) used only while pretraining.
Var perceptual_logits(Graph& g, ParameterStore& store, const ArchDescriptor& arch, const std::vector<Var>& features,
                      bool track = true);

Var baseline_forward(Graph& g, ParameterStore& store, const ArchDescriptor& arch, const Var& source,
                     const Var& encoding, bool track = true);

// Flattens each tap to (N, C*H*W) and concatenates along features.
Var flatten_concat(const std::vector<Var>& taps);

}  // namespace tvsn::model
