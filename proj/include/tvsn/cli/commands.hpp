#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tvsn::cli {

struct GenDataArgs {
  std::string kind = "car-like";
  int count = 1;
  std::uint64_t seed = 0;
  int size = 64;
  std::filesystem::path out;
  std::vector<double> elevations{0.0, 15.0, 30.0};
  int azimuth_step = 20;
  int azimuth_count = 0;  // 0 = full circle
  std::vector<std::filesystem::path> obj;
  int threads = 0;
};

struct TrainArgs {
  std::string stage;
  std::filesystem::path config;  // optional JSON
  std::filesystem::path data;
  std::filesystem::path out;
  bool resume = false;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::string loss;  // baseline loss set override
  bool quiet = false;
};

struct SynthArgs {
  std::filesystem::path ckpt;
  std::filesystem::path input;
  double theta = 0.0;
  std::filesystem::path out;
  std::filesystem::path bg_mask;
  bool dump_intermediates = false;
};

struct Rotate360Args {
  std::filesystem::path ckpt;
  std::filesystem::path input;
  int step = 20;
  std::filesystem::path out;
  std::filesystem::path bg_mask;
};

struct EvalArgs {
  std::filesystem::path ckpt;
  std::string predictor = "model";  // model | gt | gray
  std::filesystem::path data;
  std::string split = "test";
  std::filesystem::path out;  // report prefix: <out>.json and <out>.csv
  int batch = 16;
  int threads = 0;
};

struct GradcheckArgs {
  std::string ops = "all";  // "all" or comma-separated names
  std::uint64_t seed = 0;
};

// Each returns the process exit code; library errors propagate as exceptions.
int gen_data(const GenDataArgs& args, std::ostream& out);
int train(const TrainArgs& args, std::ostream& out);
int synth(const SynthArgs& args, std::ostream& out);
int rotate360(const Rotate360Args& args, std::ostream& out);
int eval(const EvalArgs& args, std::ostream& out);
int gradcheck(const GradcheckArgs& args, std::ostream& out);

// File names written by synth --dump-intermediates next to the output.
std::vector<std::filesystem::path> intermediate_paths(const std::filesystem::path& out);
// Frame names written by rotate360.
std::string rotate_frame_name(int index, int theta);

int run(int argc, char** argv);

}  // namespace tvsn::cli
