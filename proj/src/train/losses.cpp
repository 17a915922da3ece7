#include "tvsn/train/losses.hpp"

#include "tvsn/autodiff/ops.hpp"
#include "tvsn/core/error.hpp"

namespace tvsn::train {

nlohmann::json LossWeights::to_json() const {
  return {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"lambda", lambda}};
}

LossWeights LossWeights::from_json(const nlohmann::json& j) {
  LossWeights w;
  w.alpha = j.value("alpha", w.alpha);
  w.beta = j.value("beta", w.beta);
  w.gamma = j.value("gamma", w.gamma);
  w.lambda = j.value("lambda", w.lambda);
  if (w.alpha < 0 || w.beta < 0 || w.gamma < 0 || w.lambda < 0) {
    fail(ErrorKind::Parameter, "loss weights must be nonnegative");
  }
  return w;
}

namespace {

Var zero(ad::Graph& g) { return g.constant(ad::Tensor(ad::Shape{1}, 0.0f)); }

}  // namespace

GeneratorLoss generator_loss(ad::Graph& g, const Var& fake, const Var& target, const LossNets& nets,
                             const LossWeights& w) {
  if (!(fake.shape() == target.shape())) {
    fail(ErrorKind::Shape, "generator output " + fake.shape().str() + " vs target " + target.shape().str());
  }
  GeneratorLoss out;
  const bool need_d = (nets.adversarial || w.alpha > 0.0);
  if (need_d && nets.discriminator == nullptr) fail(ErrorKind::State, "adversarial terms need a discriminator");
  if (w.beta > 0.0 && nets.perceptual == nullptr) fail(ErrorKind::State, "perceptual term needs the perceptual network");
  if ((need_d || w.beta > 0.0) && nets.arch == nullptr) fail(ErrorKind::State, "loss networks need an architecture");

  out.adversarial = zero(g);
  out.feature_matching = zero(g);
  if (need_d) {
    const auto d_in = [&](const Var& x) { return nets.disc_input ? nets.disc_input(x) : x; };
    const auto df = model::discriminator_forward(g, *nets.discriminator, *nets.arch, d_in(fake), false);
    if (nets.adversarial) {
      out.adversarial = ad::bce_with_logits(df.logit, g.constant(ad::Tensor(df.logit.shape(), 1.0f)));
    }
    if (w.alpha > 0.0) {
      const auto dr = model::discriminator_forward(g, *nets.discriminator, *nets.arch, d_in(target), false);
      out.feature_matching = ad::feature_l2(model::flatten_concat(df.taps), model::flatten_concat(dr.taps));
    }
  }
  out.perceptual = zero(g);
  if (w.beta > 0.0) {
    const auto pf = model::perceptual_features(g, *nets.perceptual, *nets.arch, fake, false);
    const auto pr = model::perceptual_features(g, *nets.perceptual, *nets.arch, target, false);
    out.perceptual = ad::feature_l2(model::flatten_concat(pf), model::flatten_concat(pr));
  }
  out.l1 = ad::l1_loss(fake, target);
  out.tv = ad::tv_loss(fake);
  out.total = ad::weighted_sum({{nets.adversarial ? 1.0f : 0.0f, out.adversarial},
                                {static_cast<float>(w.alpha), out.feature_matching},
                                {static_cast<float>(w.beta), out.perceptual},
                                {static_cast<float>(w.gamma), out.l1},
                                {static_cast<float>(w.lambda), out.tv}});
  return out;
}

Var discriminator_loss(const Var& real_logit, const Var& fake_logit) {
  auto& g = real_logit.graph();
  const Var real = ad::bce_with_logits(real_logit, g.constant(ad::Tensor(real_logit.shape(), 1.0f)));
  const Var fake = ad::bce_with_logits(fake_logit, g.constant(ad::Tensor(fake_logit.shape(), 0.0f)));
  return ad::add(real, fake);
}

DoafnLoss doafn_loss(const model::DoafnOutput& out, const Var& target, const Var& mask, const Var& bg,
                     double flow_weight, double vis_weight) {
  if (!mask.valid()) fail(ErrorKind::Parameter, "doafn loss needs a ground-truth visibility mask");
  DoafnLoss l;
  l.reconstruction = ad::l1_loss(ad::mul_mask(out.i_doafn, mask), ad::mul_mask(target, mask));
  l.visibility = ad::bce_with_logits(out.vis_logit, mask);
  std::vector<std::pair<float, Var>> terms{{static_cast<float>(flow_weight), l.reconstruction},
                                           {static_cast<float>(vis_weight), l.visibility}};
  if (out.bg_logit.valid()) {
    if (!bg.valid()) fail(ErrorKind::Parameter, "background head needs a ground-truth background mask");
    l.background = ad::bce_with_logits(out.bg_logit, bg);
    terms.push_back({static_cast<float>(vis_weight), l.background});
  }
  l.total = ad::weighted_sum(terms);
  return l;
}

}  // namespace tvsn::train
