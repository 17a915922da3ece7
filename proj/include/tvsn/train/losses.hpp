#pragma once

#include <functional>

#include "json.hpp"
#include "tvsn/autodiff/graph.hpp"
#include "tvsn/model/networks.hpp"

namespace tvsn::train {

using ad::Var;

struct LossWeights {
  double alpha = 100.0;   // discriminator feature matching
  double beta = 0.001;    // perceptual features
  double gamma = 1.0;     // L1 to the target
  double lambda = 0.0001; // total variation

  nlohmann::json to_json() const;
  static LossWeights from_json(const nlohmann::json& j);
};

struct GeneratorLoss {
  Var total;
  Var adversarial;  // -log D(G)
  Var feature_matching;
  Var perceptual;
  Var l1;
  Var tv;
};

// Networks needed by the generator objective. A null store disables the term
// family that depends on it; requesting a term with non-zero weight and no
// network is a state error.
struct LossNets {
  ad::ParameterStore* discriminator = nullptr;
  ad::ParameterStore* perceptual = nullptr;
  const model::ArchDescriptor* arch = nullptr;
  bool adversarial = true;  // include -log D(G)
  // Applied to both discriminator inputs (fake and target) before D sees them.
  std::function<Var(const Var&)> disc_input;
};

// Eq.-7 style objective. Terms with zero weight are still reported (as
// constants) so that the breakdown always sums to the total.
GeneratorLoss generator_loss(ad::Graph& g, const Var& fake, const Var& target, const LossNets& nets,
                             const LossWeights& w);

// -log D(real) - log(1 - D(fake)), each as a batch mean.
Var discriminator_loss(const Var& real_logit, const Var& fake_logit);

struct DoafnLoss {
  Var total;
  Var reconstruction;
  Var visibility;
  Var background;  // only with a background head
};

// gamma_f * L1(i_doafn * M, I_t * M) + gamma_v * BCE(vis_logit, M)
// (+ gamma_v * BCE(bg_logit, M_bg) when the background head exists).
DoafnLoss doafn_loss(const model::DoafnOutput& out, const Var& target, const Var& mask, const Var& bg,
                     double flow_weight, double vis_weight);

}  // namespace tvsn::train
