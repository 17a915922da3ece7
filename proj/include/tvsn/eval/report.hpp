#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tvsn/core/grid.hpp"
#include "tvsn/data/dataset.hpp"

namespace tvsn::eval {

struct PairScore {
  int pair = 0;
  int src = 0;
  int tgt = 0;
  int theta = 0;
  double l1 = 0.0;
  double ssim = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
};

struct EvalReport {
  std::string predictor;
  std::string split;
  std::vector<PairScore> pairs;
  Aggregate l1;
  Aggregate ssim;
  nlohmann::json config;
  double runtime_s = 0.0;

  nlohmann::json to_json() const;
  void write_json(const std::filesystem::path& path) const;
  void write_csv(const std::filesystem::path& path) const;
};

// Predicts target images for a batch of pairs. Masks are the ground-truth
// background masks of each pair.
using Predictor = std::function<std::vector<Image>(const std::vector<const data::PairSample*>& pairs)>;

Predictor model_predictor(const std::filesystem::path& checkpoint);
Predictor target_predictor();                 // returns the ground truth
Predictor constant_predictor(float value);    // e.g. 0.5 gray

EvalReport evaluate(const std::filesystem::path& data, const std::string& split, const Predictor& predict,
                    const std::string& predictor_name, int batch = 16, int threads = 1);

}  // namespace tvsn::eval
