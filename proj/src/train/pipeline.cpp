#include "tvsn/train/pipeline.hpp"

#include "tvsn/autodiff/ops.hpp"
#include "tvsn/core/error.hpp"
#include "tvsn/model/networks.hpp"
#include "tvsn/train/batch.hpp"
#include "tvsn/train/encoding.hpp"

namespace tvsn::train {

using ad::Graph;
using ad::Tensor;
using ad::Var;

Grid<float> estimate_background(const Image& image) {
  Grid<float> bg(image.height(), image.width(), 0.0f);
  const float white = 1.0f - 0.5f / 255.0f;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      bool all = true;
      for (int c = 0; c < image.channels(); ++c) all = all && image(c, y, x) >= white;
      bg(y, x) = all ? 1.0f : 0.0f;
    }
  }
  return bg;
}

Synthesizer::Synthesizer(const std::filesystem::path& checkpoint) : ck_(model::load_checkpoint(checkpoint)) {
  const auto has = [&](const char* prefix) { return !ck_.params.with_prefix(prefix).empty(); };
  if (has(model::kCompletion) && has(model::kDoafn)) {
    kind_ = "tvsn";
  } else if (has(model::kBaseline)) {
    kind_ = "baseline";
  } else if (has(model::kDoafn)) {
    kind_ = "doafn";
  } else {
    fail(ErrorKind::State, checkpoint.string() + " holds no synthesis network (perceptual-only checkpoint?)");
  }
}

Synthesis Synthesizer::run(const Image& source, double theta, const Grid<float>* bg) const {
  return std::move(run({&source}, {theta}, {bg}).front());
}

std::vector<Synthesis> Synthesizer::run(const std::vector<const Image*>& sources, const std::vector<double>& thetas,
                                        const std::vector<const Grid<float>*>& bgs) const {
  if (sources.empty()) return {};
  if (thetas.size() != sources.size() || bgs.size() != sources.size()) {
    fail(ErrorKind::Parameter, "synthesis needs one theta and one mask slot per source");
  }
  const auto& arch = ck_.arch;
  for (const Image* s : sources) {
    if (s->channels() != arch.channels || s->height() != arch.size || s->width() != arch.size) {
      fail(ErrorKind::Shape, "input image is " + std::to_string(s->channels()) + "x" + std::to_string(s->height()) +
                                 "x" + std::to_string(s->width()) + " but the model expects " +
                                 std::to_string(arch.channels) + "x" + std::to_string(arch.size) + "x" +
                                 std::to_string(arch.size));
    }
  }
  const int n = static_cast<int>(sources.size());
  Tensor enc(ad::Shape{n, kEncodingDim});
  for (int i = 0; i < n; ++i) {
    const auto e = encode_transform(thetas[static_cast<std::size_t>(i)]);
    std::copy(e.t.begin(), e.t.end(), enc.data() + static_cast<std::size_t>(i) * kEncodingDim);
  }

  // Masks: explicit, predicted, or estimated from the source.
  const bool use_head = arch.predict_background;
  std::vector<Grid<float>> masks(sources.size());
  bool any_explicit = false;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (bgs[i] != nullptr) {
      if (bgs[i]->height() != arch.size || bgs[i]->width() != arch.size) {
        fail(ErrorKind::Shape, "background mask is " + std::to_string(bgs[i]->height()) + "x" +
                                   std::to_string(bgs[i]->width()) + " but the model expects " +
                                   std::to_string(arch.size) + "x" + std::to_string(arch.size));
      }
      masks[i] = *bgs[i];
      any_explicit = true;
    } else if (!use_head) {
      masks[i] = estimate_background(*sources[i]);
    }
  }
  if (use_head && any_explicit) {
    for (std::size_t i = 0; i < sources.size(); ++i) {
      if (bgs[i] == nullptr) fail(ErrorKind::Parameter, "give background masks for all inputs of a batch or none");
    }
  }

  Graph g;
  const Var src = g.constant(stack_images(sources));
  const Var t = g.constant(std::move(enc));
  std::vector<Synthesis> out(sources.size());

  if (kind_ == "baseline") {
    const Var y = model::baseline_forward(g, ck_.params, arch, src, t, false);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)].output = unstack_image(y.value(), i);
    return out;
  }

  Var bg;
  if (!use_head || any_explicit) {
    std::vector<const Grid<float>*> ptrs;
    for (const auto& m : masks) ptrs.push_back(&m);
    bg = g.constant(stack_masks(ptrs));
  }
  const auto d = model::doafn_forward(g, ck_.params, arch, src, t, bg, false);
  Var y = d.i_doafn;
  if (kind_ == "tvsn") y = model::completion_forward(g, ck_.params, arch, d.i_doafn, d.bottleneck, false);
  const Var used_bg = bg.valid() ? bg : ad::sigmoid(d.bg_logit);
  for (int i = 0; i < n; ++i) {
    auto& s = out[static_cast<std::size_t>(i)];
    s.output = unstack_image(y.value(), i);
    s.i_doafn = unstack_image(d.i_doafn.value(), i);
    s.vis = unstack_mask(d.vis.value(), i);
    const Image flow = unstack_image(d.flow.value(), i);
    s.flow_y = Grid<float>(arch.size, arch.size);
    s.flow_x = Grid<float>(arch.size, arch.size);
    for (int r = 0; r < arch.size; ++r) {
      for (int c = 0; c < arch.size; ++c) {
        s.flow_y(r, c) = flow(0, r, c);
        s.flow_x(r, c) = flow(1, r, c);
      }
    }
    s.bg = unstack_mask(used_bg.value(), i);
  }
  return out;
}

}  // namespace tvsn::train
