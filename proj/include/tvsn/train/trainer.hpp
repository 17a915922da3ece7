#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tvsn/train/config.hpp"

namespace tvsn::train {

// Files inside a training output directory.
inline constexpr const char* kPerceptualCheckpoint = "perceptual.tvsn";
inline constexpr const char* kDoafnCheckpoint = "doafn.tvsn";
inline constexpr const char* kCompletionCheckpoint = "completion.tvsn";
inline constexpr const char* kBaselineCheckpoint = "baseline.tvsn";

std::string log_name(const std::string& stage);  // "<stage>_log.jsonl"

struct StageOptions {
  std::filesystem::path data;  // dataset root holding manifest.json
  std::filesystem::path out;   // checkpoints and logs
  std::string split = "train";
  bool resume = false;
  // Stop after this many steps of the current stage even if the configured
  // cap is higher (0 = no limit); the checkpoint is written as usual.
  long stop_after = 0;
  // Prerequisite checkpoints; empty means "<out>/<default name>".
  std::filesystem::path perceptual_checkpoint;
  std::filesystem::path doafn_checkpoint;
  std::function<void(const nlohmann::json&)> on_record;  // every log record
};

struct StageResult {
  std::string stage;
  long steps = 0;
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  nlohmann::json summary;
};

StageResult train_perceptual(const TrainConfig& config, const StageOptions& options);
StageResult train_doafn(const TrainConfig& config, const StageOptions& options);
StageResult train_completion(const TrainConfig& config, const StageOptions& options);
StageResult train_baseline(const TrainConfig& config, const StageOptions& options);

std::vector<nlohmann::json> read_log(const std::filesystem::path& path);

}  // namespace tvsn::train
