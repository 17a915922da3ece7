#include "tvsn/train/config.hpp"

#include <fstream>

#include "tvsn/core/error.hpp"

namespace tvsn::train {

namespace {

using nlohmann::json;

json lr_json(const ad::LrSchedule& s) {
  return {{"initial", s.initial}, {"after", s.after}, {"drop_step", s.drop_step}};
}

void read_lr(const json& j, const char* key, ad::LrSchedule& s) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  s.initial = v.value("initial", s.initial);
  s.after = v.value("after", s.after);
  s.drop_step = v.value("drop_step", s.drop_step);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json TrainConfig::to_json() const {
  return {{"version", kVersion},
          {"seed", seed},
          {"image_size", image_size},
          {"predict_background", predict_background},
          {"perceptual",
           {{"batch", perceptual.batch},
            {"max_steps", perceptual.max_steps},
            {"target_accuracy", perceptual.target_accuracy},
            {"eval_every", perceptual.eval_every},
            {"lr", lr_json(perceptual.lr)},
            {"random_weights", perceptual.random_weights}}},
          {"doafn",
           {{"batch", doafn.batch},
            {"steps", doafn.steps},
            {"lr", lr_json(doafn.lr)},
            {"flow_weight", doafn.flow_weight},
            {"vis_weight", doafn.vis_weight},
            {"vis_target", doafn.vis_target},
            {"checkpoint_every", doafn.checkpoint_every}}},
          {"completion",
           {{"batch", completion.batch},
            {"generator_steps", completion.generator_steps},
            {"ratio", completion.ratio},
            {"lr", lr_json(completion.lr)},
            {"disc_lr", lr_json(completion.disc_lr)},
            {"weights", completion.weights.to_json()},
            {"use_discriminator", completion.use_discriminator},
            {"disc_noise", completion.disc_noise},
            {"l1_reference", completion.l1_reference},
            {"real_sample", completion.real_sample},
            {"joint_finetune", completion.joint_finetune},
            {"joint_steps", completion.joint_steps},
            {"checkpoint_every", completion.checkpoint_every}}},
          {"baseline",
           {{"batch", baseline.batch},
            {"steps", baseline.steps},
            {"loss", baseline.loss},
            {"ratio", baseline.ratio},
            {"disc_noise", baseline.disc_noise},
            {"lr", lr_json(baseline.lr)},
            {"disc_lr", lr_json(baseline.disc_lr)},
            {"weights", baseline.weights.to_json()},
            {"checkpoint_every", baseline.checkpoint_every}}}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  try {
    if (j.contains("version") && j.at("version").get<int>() != kVersion) {
      fail(ErrorKind::Parameter, "unsupported config version " + j.at("version").dump());
    }
    read(j, "seed", c.seed);
    read(j, "image_size", c.image_size);
    read(j, "predict_background", c.predict_background);
    if (j.contains("perceptual")) {
      const json& p = j.at("perceptual");
      read(p, "batch", c.perceptual.batch);
      read(p, "max_steps", c.perceptual.max_steps);
      read(p, "target_accuracy", c.perceptual.target_accuracy);
      read(p, "eval_every", c.perceptual.eval_every);
      read_lr(p, "lr", c.perceptual.lr);
      read(p, "random_weights", c.perceptual.random_weights);
    }
    if (j.contains("doafn")) {
      const json& d = j.at("doafn");
      read(d, "batch", c.doafn.batch);
      read(d, "steps", c.doafn.steps);
      read_lr(d, "lr", c.doafn.lr);
      read(d, "flow_weight", c.doafn.flow_weight);
      read(d, "vis_weight", c.doafn.vis_weight);
      read(d, "vis_target", c.doafn.vis_target);
      read(d, "checkpoint_every", c.doafn.checkpoint_every);
    }
    if (j.contains("completion")) {
      const json& d = j.at("completion");
      read(d, "batch", c.completion.batch);
      read(d, "generator_steps", c.completion.generator_steps);
      read(d, "ratio", c.completion.ratio);
      read_lr(d, "lr", c.completion.lr);
      read_lr(d, "disc_lr", c.completion.disc_lr);
      if (d.contains("weights")) c.completion.weights = LossWeights::from_json(d.at("weights"));
      read(d, "use_discriminator", c.completion.use_discriminator);
      read(d, "disc_noise", c.completion.disc_noise);
      read(d, "l1_reference", c.completion.l1_reference);
      read(d, "real_sample", c.completion.real_sample);
      read(d, "joint_finetune", c.completion.joint_finetune);
      read(d, "joint_steps", c.completion.joint_steps);
      read(d, "checkpoint_every", c.completion.checkpoint_every);
    }
    if (j.contains("baseline")) {
      const json& d = j.at("baseline");
      read(d, "batch", c.baseline.batch);
      read(d, "steps", c.baseline.steps);
      read(d, "loss", c.baseline.loss);
      read(d, "ratio", c.baseline.ratio);
      read(d, "disc_noise", c.baseline.disc_noise);
      read_lr(d, "lr", c.baseline.lr);
      read_lr(d, "disc_lr", c.baseline.disc_lr);
      if (d.contains("weights")) c.baseline.weights = LossWeights::from_json(d.at("weights"));
      read(d, "checkpoint_every", c.baseline.checkpoint_every);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parameter, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return from_json(j);
}

void TrainConfig::validate() const {
  const auto bad = [](const std::string& m) { fail(ErrorKind::Parameter, "config: " + m); };
  if (perceptual.batch < 1 || doafn.batch < 1 || completion.batch < 1 || baseline.batch < 1) {
    bad("batch sizes must be >= 1");
  }
  if (perceptual.max_steps < 0 || doafn.steps < 0 || completion.generator_steps < 0 || baseline.steps < 0 ||
      completion.joint_steps < 0) {
    bad("step counts must be nonnegative");
  }
  if (completion.ratio < 1 || baseline.ratio < 1) bad("update ratio must be >= 1");
  if (!(completion.disc_noise >= 0.0) || !(baseline.disc_noise >= 0.0)) bad("disc_noise must be >= 0");
  if (doafn.vis_target != "svis" && doafn.vis_target != "vis") bad("doafn.vis_target must be 'svis' or 'vis'");
  if (completion.l1_reference != "target" && completion.l1_reference != "source") {
    bad("completion.l1_reference must be 'target' or 'source'");
  }
  if (completion.real_sample != "target" && completion.real_sample != "source") {
    bad("completion.real_sample must be 'target' or 'source'");
  }
  if (baseline.loss != "l1" && baseline.loss != "vgg" && baseline.loss != "adv" && baseline.loss != "vgg+adv") {
    bad("baseline.loss must be one of l1, vgg, adv, vgg+adv");
  }
  if (doafn.checkpoint_every < 1 || completion.checkpoint_every < 1 || baseline.checkpoint_every < 1 ||
      perceptual.eval_every < 1) {
    bad("intervals must be >= 1");
  }
}

}  // namespace tvsn::train
