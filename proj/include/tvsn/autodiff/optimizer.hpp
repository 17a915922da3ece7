#pragma once

#include <string>
#include <vector>

#include "tvsn/autodiff/graph.hpp"
#include "tvsn/core/tensor_file.hpp"

namespace tvsn::ad {

// Piecewise-constant learning rate: `initial` before `drop_step`, `after` from then on.
struct LrSchedule {
  double initial = 1e-4;
  double after = 1e-5;
  long drop_step = 10000;

  double at(long step) const { return step < drop_step ? initial : after; }
};

struct AdamConfig {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  LrSchedule schedule;
};

// Adam over every parameter whose name starts with `prefix`. Frozen
// parameters keep their values and moments.
class Adam {
 public:
  Adam(ParameterStore& store, std::string prefix, AdamConfig config);

  void step();
  long steps() const { return step_; }
  double current_lr() const { return config_.schedule.at(step_); }
  const AdamConfig& config() const { return config_; }
  const std::string& prefix() const { return prefix_; }

  // Moments and step count under "<tag>.step", "<tag>.m.<param>", "<tag>.v.<param>".
  void save(TensorFile& file, const std::string& tag) const;
  void load(const TensorFile& file, const std::string& tag);

 private:
  std::string prefix_;
  AdamConfig config_;
  std::vector<Parameter*> params_;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
  long step_ = 0;
};

}  // namespace tvsn::ad
