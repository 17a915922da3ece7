#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tvsn/autodiff/tensor.hpp"
#include "tvsn/data/dataset.hpp"

namespace tvsn::train {

// Pair tensors stacked along the batch axis.
struct PairBatch {
  ad::Tensor source;    // (N,3,H,W)
  ad::Tensor target;    // (N,3,H,W)
  ad::Tensor vis;       // (N,1,H,W)
  ad::Tensor svis;      // (N,1,H,W)
  ad::Tensor bg;        // (N,1,H,W)
  ad::Tensor encoding;  // (N,17)
  std::vector<int> pairs;
};

// Pairs of one split. View images stay in memory; pair masks are read on
// demand.
class PairSet {
 public:
  PairSet(std::filesystem::path root, const std::string& split);

  const data::DatasetManifest& manifest() const { return manifest_; }
  const std::filesystem::path& root() const { return root_; }
  const std::vector<int>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  int image_size() const { return manifest_.spec.size; }

  // `slots` index into pairs().
  PairBatch batch(const std::vector<int>& slots) const;
  data::PairSample sample(int slot) const;
  const Image& view_rgb(int view_id) const;

 private:
  std::filesystem::path root_;
  data::DatasetManifest manifest_;
  std::vector<int> pairs_;
  struct ViewImages {
    Image rgb;
    Grid<float> fg;
  };
  std::map<int, ViewImages> views_;
};

// Endless sequence of epoch permutations of [0, n). Position p belongs to epoch
// p / n, so any step can be recomputed without replaying earlier ones.
class IndexStream {
 public:
  IndexStream(std::size_t n, std::uint64_t seed, std::uint64_t salt);
  int at(std::uint64_t position);
  std::vector<int> take(std::uint64_t first, int count);

 private:
  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t salt_;
  std::uint64_t epoch_ = ~0ULL;
  std::vector<int> perm_;
};

ad::Tensor stack_images(const std::vector<const Image*>& images);
ad::Tensor stack_masks(const std::vector<const Grid<float>*>& masks);
Image unstack_image(const ad::Tensor& t, int index);
Grid<float> unstack_mask(const ad::Tensor& t, int index);

}  // namespace tvsn::train
