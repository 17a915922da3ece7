#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "tvsn/autodiff/optimizer.hpp"
#include "tvsn/train/losses.hpp"

namespace tvsn::train {

struct PerceptualConfig {
  int batch = 16;
  long max_steps = 2000;
  double target_accuracy = 0.8;
  int eval_every = 50;
  ad::LrSchedule lr{1e-3, 1e-4, 1000000};
  bool random_weights = false;  // skip pretraining and freeze the initial weights
};

struct DoafnConfig {
  int batch = 8;
  long steps = 3000;
  ad::LrSchedule lr{1e-4, 1e-5, 10000};
  double flow_weight = 1.0;
  double vis_weight = 0.1;
  std::string vis_target = "svis";  // "svis" or "vis"
  long checkpoint_every = 1000;
};

struct CompletionConfig {
  int batch = 4;
  long generator_steps = 3000;
  int ratio = 2;  // generator steps per discriminator step
  ad::LrSchedule lr{1e-4, 1e-5, 10000};
  ad::LrSchedule disc_lr{1e-4, 1e-5, 10000};
  LossWeights weights;
  bool use_discriminator = true;
  double disc_noise = 0.1;  // std of Gaussian noise added to every discriminator input
  std::string l1_reference = "target";  // "target" or "source"
  std::string real_sample = "target";   // "target" or "source"
  bool joint_finetune = false;
  long joint_steps = 0;
  long checkpoint_every = 1000;
};

struct BaselineConfig {
  int batch = 8;
  long steps = 3000;
  std::string loss = "l1";  // "l1", "vgg", "adv" or "vgg+adv"
  int ratio = 2;
  double disc_noise = 0.1;
  ad::LrSchedule lr{1e-4, 1e-5, 10000};
  ad::LrSchedule disc_lr{1e-4, 1e-5, 10000};
  LossWeights weights;
  long checkpoint_every = 1000;
};

struct TrainConfig {
  static constexpr int kVersion = 1;

  std::uint64_t seed = 0;
  int image_size = 64;
  bool predict_background = false;
  PerceptualConfig perceptual;
  DoafnConfig doafn;
  CompletionConfig completion;
  BaselineConfig baseline;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; invalid values raise parameter errors.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& path);
  void validate() const;
};

}  // namespace tvsn::train
