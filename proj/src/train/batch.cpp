#include "tvsn/train/batch.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "tvsn/core/error.hpp"
#include "tvsn/core/image_io.hpp"
#include "tvsn/train/encoding.hpp"

namespace tvsn::train {

ad::Tensor stack_images(const std::vector<const Image*>& images) {
  const Image& first = *images.front();
  const int n = static_cast<int>(images.size());
  ad::Tensor t(ad::Shape{n, first.channels(), first.height(), first.width()});
  for (int i = 0; i < n; ++i) {
    if (!images[static_cast<std::size_t>(i)]->same_size(first)) fail(ErrorKind::Shape, "batch images differ in size");
    std::copy(images[static_cast<std::size_t>(i)]->data().begin(), images[static_cast<std::size_t>(i)]->data().end(),
              t.data() + static_cast<std::size_t>(i) * first.size());
  }
  return t;
}

ad::Tensor stack_masks(const std::vector<const Grid<float>*>& masks) {
  const Grid<float>& first = *masks.front();
  const int n = static_cast<int>(masks.size());
  ad::Tensor t(ad::Shape{n, 1, first.height(), first.width()});
  for (int i = 0; i < n; ++i) {
    if (!masks[static_cast<std::size_t>(i)]->same_size(first)) fail(ErrorKind::Shape, "batch masks differ in size");
    std::copy(masks[static_cast<std::size_t>(i)]->data().begin(), masks[static_cast<std::size_t>(i)]->data().end(),
              t.data() + static_cast<std::size_t>(i) * first.size());
  }
  return t;
}

Image unstack_image(const ad::Tensor& t, int index) {
  const auto& s = t.shape();
  Image img(s[1], s[2], s[3]);
  std::copy_n(t.data() + static_cast<std::size_t>(index) * img.size(), img.size(), img.data().begin());
  return img;
}

Grid<float> unstack_mask(const ad::Tensor& t, int index) {
  const auto& s = t.shape();
  Grid<float> g(s[2], s[3]);
  std::copy_n(t.data() + static_cast<std::size_t>(index) * g.size(), g.size(), g.data().begin());
  return g;
}

PairSet::PairSet(std::filesystem::path root, const std::string& split)
    : root_(std::move(root)), manifest_(data::read_manifest(root_ / "manifest.json")) {
  pairs_ = manifest_.pairs_in_split(split);
  if (pairs_.empty()) fail(ErrorKind::Parameter, "split '" + split + "' of " + root_.string() + " has no pairs");
  for (int p : pairs_) {
    for (int v : {manifest_.pairs[static_cast<std::size_t>(p)].src, manifest_.pairs[static_cast<std::size_t>(p)].tgt}) {
      if (views_.count(v) != 0) continue;
      const auto dir = root_ / manifest_.view(v).dir;
      views_[v] = {read_png(dir / data::kRgbFile), read_png_mask(dir / data::kFgFile)};
    }
  }
}

const Image& PairSet::view_rgb(int view_id) const {
  const auto it = views_.find(view_id);
  if (it == views_.end()) fail(ErrorKind::Lookup, "view " + std::to_string(view_id) + " is not part of this split");
  return it->second.rgb;
}

data::PairSample PairSet::sample(int slot) const {
  const auto& p = manifest_.pairs.at(static_cast<std::size_t>(pairs_.at(static_cast<std::size_t>(slot))));
  const auto& src = views_.at(p.src);
  const auto& tgt = views_.at(p.tgt);
  const auto dir = root_ / p.dir;
  data::PairSample s;
  s.src_rgb = src.rgb;
  s.tgt_rgb = tgt.rgb;
  s.src_fg = src.fg;
  s.tgt_fg = tgt.fg;
  s.vis = read_png_mask(dir / data::kVisFile);
  s.svis = read_png_mask(dir / data::kSvisFile);
  s.bg = read_png_mask(dir / data::kBgFile);
  s.theta = p.theta;
  return s;
}

PairBatch PairSet::batch(const std::vector<int>& slots) const {
  std::vector<const Image*> src;
  std::vector<const Image*> tgt;
  std::vector<const Grid<float>*> vis;
  std::vector<const Grid<float>*> svis;
  std::vector<const Grid<float>*> bg;
  std::vector<data::PairSample> samples;
  for (int slot : slots) samples.push_back(sample(slot));
  PairBatch b;
  b.encoding = ad::Tensor(ad::Shape{static_cast<int>(slots.size()), kEncodingDim});
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& s = samples[i];
    src.push_back(&s.src_rgb);
    tgt.push_back(&s.tgt_rgb);
    vis.push_back(&s.vis);
    svis.push_back(&s.svis);
    bg.push_back(&s.bg);
    const auto enc = encode_transform(s.theta);
    std::copy(enc.t.begin(), enc.t.end(), b.encoding.data() + i * kEncodingDim);
    b.pairs.push_back(pairs_[static_cast<std::size_t>(slots[i])]);
  }
  b.source = stack_images(src);
  b.target = stack_images(tgt);
  b.vis = stack_masks(vis);
  b.svis = stack_masks(svis);
  b.bg = stack_masks(bg);
  return b;
}

IndexStream::IndexStream(std::size_t n, std::uint64_t seed, std::uint64_t salt) : n_(n), seed_(seed), salt_(salt) {
  if (n_ == 0) fail(ErrorKind::Parameter, "cannot sample from an empty set");
}

int IndexStream::at(std::uint64_t position) {
  const std::uint64_t epoch = position / n_;
  if (epoch != epoch_) {
    perm_.resize(n_);
    std::iota(perm_.begin(), perm_.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(salt_), static_cast<std::uint32_t>(epoch),
                      static_cast<std::uint32_t>(epoch >> 32)};
    std::mt19937_64 rng(seq);
    // Fisher-Yates with an explicit modulus keeps the order independent of
    // the standard library's distribution implementation.
    for (std::size_t i = n_ - 1; i > 0; --i) std::swap(perm_[i], perm_[rng() % (i + 1)]);
    epoch_ = epoch;
  }
  return perm_[position % n_];
}

std::vector<int> IndexStream::take(std::uint64_t first, int count) {
  std::vector<int> out;
  for (int i = 0; i < count; ++i) out.push_back(at(first + static_cast<std::uint64_t>(i)));
  return out;
}

}  // namespace tvsn::train
