#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tvsn/core/grid.hpp"
#include "tvsn/model/checkpoint.hpp"

namespace tvsn::train {

struct Synthesis {
  Image output;
  // Empty for the single-stage baseline.
  Image i_doafn;
  Grid<float> vis;
  Grid<float> flow_y;  // source row sampled by each target pixel
  Grid<float> flow_x;
  Grid<float> bg;      // background mask used for compositing
};

// Background of a rendered view: pixels equal to the white clear colour.
Grid<float> estimate_background(const Image& image);

// Inference over a trained checkpoint. Completion checkpoints run the full
// two-stage model, DOAFN checkpoints stop at the composite, baseline
// checkpoints run the single-stage network.
class Synthesizer {
 public:
  explicit Synthesizer(const std::filesystem::path& checkpoint);

  const std::string& kind() const { return kind_; }  // "tvsn" | "doafn" | "baseline"
  const model::ArchDescriptor& arch() const { return ck_.arch; }

  // A null background mask falls back to the background head when the model
  // has one, otherwise to estimate_background(source).
  Synthesis run(const Image& source, double theta, const Grid<float>* bg = nullptr) const;
  std::vector<Synthesis> run(const std::vector<const Image*>& sources, const std::vector<double>& thetas,
                             const std::vector<const Grid<float>*>& bgs) const;

 private:
  mutable model::Checkpoint ck_;
  std::string kind_;
};

}  // namespace tvsn::train
