#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "tvsn/autodiff/ops.hpp"
#include "tvsn/core/error.hpp"
#include "tvsn/model/checkpoint.hpp"
#include "tvsn/model/networks.hpp"

using namespace tvsn;
using namespace tvsn::model;
using ad::Shape;
using ad::Tensor;

namespace {

struct Nets {
  ArchDescriptor arch = ArchDescriptor::for_size(64);
  ParameterStore store;
  explicit Nets(std::uint64_t seed = 5) {
    std::mt19937_64 rng(seed);
    init_doafn(store, arch, rng);
    init_completion(store, arch, rng);
    init_discriminator(store, arch, rng);
    init_perceptual(store, arch, rng);
  }
};

Tensor one_hot(int n, int k) {
  Tensor t(Shape{n, 17});
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i * 17 + k)] = 1.0f;
  return t;
}

Tensor half_mask(int n) {
  Tensor m(Shape{n, 1, 64, 64});
  for (std::size_t i = 0; i < m.numel(); ++i) m[i] = (i % 64) < 10 ? 1.0f : 0.0f;
  return m;
}

}  // namespace

TEST_CASE("DOAFN outputs have the documented shapes and ranges") {
  Nets nets;
  ad::Graph g;
  const Tensor src = testing::random_tensor(Shape{2, 3, 64, 64}, 1, 0.0f, 1.0f);
  const auto out = doafn_forward(g, nets.store, nets.arch, g.constant(src), g.constant(one_hot(2, 3)),
                                 g.constant(half_mask(2)));
  CHECK(out.flow.shape() == Shape{2, 2, 64, 64});
  CHECK(out.vis.shape() == Shape{2, 1, 64, 64});
  CHECK(out.i_doafn.shape() == Shape{2, 3, 64, 64});
  CHECK(out.bottleneck.shape() == Shape{2, 512});
  CHECK_FALSE(out.bg_logit.valid());
  int bad = 0;
  for (float f : out.flow.value().values()) bad += !(f >= 0.0f && f <= 63.0f);
  for (float v : out.vis.value().values()) bad += !(v > 0.0f && v < 1.0f);
  CHECK(bad == 0);
  // Background pixels copy the source unchanged.
  int changed = 0;
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 10; ++x) {
          const std::size_t i = static_cast<std::size_t>(((n * 3 + c) * 64 + y) * 64 + x);
          changed += out.i_doafn.value()[i] != src[i];
        }
  CHECK(changed == 0);
}

TEST_CASE("a zeroed flow head samples the image centre") {
  Nets nets;
  nets.store.get("doafn.flow_head.w").value.fill(0.0f);
  nets.store.get("doafn.flow_head.b").value.fill(0.0f);
  ad::Graph g;
  const Tensor src = testing::random_tensor(Shape{1, 3, 64, 64}, 2, 0.0f, 1.0f);
  const auto out = doafn_forward(g, nets.store, nets.arch, g.constant(src), g.constant(one_hot(1, 0)),
                                 g.constant(Tensor(Shape{1, 1, 64, 64})));
  int off = 0;
  for (float f : out.flow.value().values()) off += f != 31.5f;
  CHECK(off == 0);
  for (int c = 0; c < 3; ++c) {
    const auto at = [&](int y, int x) { return src[static_cast<std::size_t>((c * 64 + y) * 64 + x)]; };
    const float centre = 0.25f * (at(31, 31) + at(31, 32) + at(32, 31) + at(32, 32));
    CHECK(out.afn.value()[static_cast<std::size_t>(c * 4096 + 100)] == doctest::Approx(centre).epsilon(1e-5));
  }
}

TEST_CASE("the transform encoding changes the DOAFN prediction") {
  Nets nets;
  ad::Graph g;
  const Tensor src = testing::random_tensor(Shape{1, 3, 64, 64}, 3, 0.0f, 1.0f);
  const Tensor bg(Shape{1, 1, 64, 64});
  const auto a = doafn_forward(g, nets.store, nets.arch, g.constant(src), g.constant(one_hot(1, 0)), g.constant(bg));
  const auto b = doafn_forward(g, nets.store, nets.arch, g.constant(src), g.constant(one_hot(1, 8)), g.constant(bg));
  CHECK_FALSE(a.flow.value() == b.flow.value());
}

TEST_CASE("the completion network reads the DOAFN bottleneck") {
  Nets nets;
  ad::Graph g;
  const Tensor img = testing::random_tensor(Shape{1, 3, 64, 64}, 4, 0.0f, 1.0f);
  const auto y0 = completion_forward(g, nets.store, nets.arch, g.constant(img),
                                     g.constant(Tensor(Shape{1, 512})));
  const auto y1 = completion_forward(g, nets.store, nets.arch, g.constant(img),
                                     g.constant(testing::random_tensor(Shape{1, 512}, 5, -2.0f, 2.0f)));
  REQUIRE(y0.shape() == Shape{1, 3, 64, 64});
  double diff = 0.0;
  int outside = 0;
  for (std::size_t i = 0; i < y0.value().numel(); ++i) {
    outside += !(y0.value()[i] > 0.0f && y0.value()[i] < 1.0f);
    diff += std::abs(y0.value()[i] - y1.value()[i]);
  }
  CHECK(outside == 0);
  CHECK(diff > 0.0);
  // Freshly initialized, it roughly passes its input through.
  double l1 = 0.0;
  for (std::size_t i = 0; i < img.numel(); ++i) l1 += std::abs(y0.value()[i] - img[i]);
  CHECK(l1 / static_cast<double>(img.numel()) < 0.15);
}

TEST_CASE("discriminator and perceptual taps") {
  Nets nets;
  ad::Graph g;
  const Var img = g.constant(testing::random_tensor(Shape{3, 3, 64, 64}, 6, 0.0f, 1.0f));
  const auto d = discriminator_forward(g, nets.store, nets.arch, img);
  CHECK(d.logit.shape() == Shape{3, 1});
  CHECK(d.taps.size() == 3);
  const auto f = perceptual_features(g, nets.store, nets.arch, img);
  REQUIRE(f.size() == 3);
  CHECK(f[2].shape()[1] == 64);
  CHECK(flatten_concat(f).shape()[0] == 3);
  CHECK(perceptual_logits(g, nets.store, nets.arch, f).shape() == Shape{3, 18});
}

TEST_CASE("frozen perceptual weights receive no gradient while the generator does") {
  Nets nets;
  ad::Graph g;
  const Var src = g.constant(testing::random_tensor(Shape{1, 3, 64, 64}, 7, 0.0f, 1.0f));
  const auto out = doafn_forward(g, nets.store, nets.arch, src, g.constant(one_hot(1, 2)),
                                 g.constant(Tensor(Shape{1, 1, 64, 64})));
  const auto y = completion_forward(g, nets.store, nets.arch, out.i_doafn, out.bottleneck);
  const auto feats = perceptual_features(g, nets.store, nets.arch, y);
  const Var loss = ad::add(ad::mean(feats.back()), ad::l1_loss(y, src));
  g.backward(loss);
  bool any_completion = false;
  int non_finite = 0;
  int perceptual_nonzero = 0;
  for (const auto& p : nets.store.all()) {
    for (float v : p.grad.values()) {
      non_finite += !std::isfinite(v);
      if (p.name.starts_with(kPerceptual)) perceptual_nonzero += v != 0.0f;
      if (p.name.starts_with(kCompletion)) any_completion = any_completion || v != 0.0f;
    }
  }
  CHECK(non_finite == 0);
  CHECK(perceptual_nonzero == 0);
  CHECK(any_completion);
  CHECK_FALSE(nets.store.get("doafn.flow_head.w").grad == Tensor(Shape{2, 16, 3, 3}));
}

TEST_CASE("checkpoint save and load reproduce the forward pass bitwise") {
  testing::TempDir dir("model");
  Nets nets;
  const auto path = dir.path() / "m.tvsn";
  save_checkpoint(path, nets.arch, nets.store, {{"stage", "test"}}, {kDoafn});
  CHECK(std::filesystem::exists(sidecar_path(path)));
  auto ck = load_checkpoint(path);
  CHECK(ck.arch == nets.arch);
  CHECK(ck.meta.at("stage") == "test");
  CHECK_FALSE(ck.params.contains("completion.out.w"));
  const Tensor src = testing::random_tensor(Shape{1, 3, 64, 64}, 8, 0.0f, 1.0f);
  ad::Graph g;
  const auto a = doafn_forward(g, nets.store, nets.arch, g.constant(src), g.constant(one_hot(1, 4)),
                               g.constant(half_mask(1)));
  const auto b = doafn_forward(g, ck.params, ck.arch, g.constant(src), g.constant(one_hot(1, 4)),
                               g.constant(half_mask(1)));
  CHECK(a.i_doafn.value() == b.i_doafn.value());
  CHECK(a.vis.value() == b.vis.value());
}

TEST_CASE("model error paths") {
  Nets nets;
  ad::Graph g;
  const Var small = g.constant(Tensor(Shape{1, 3, 32, 32}));
  const Var enc = g.constant(one_hot(1, 0));
  try {
    doafn_forward(g, nets.store, nets.arch, small, enc, Var());
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
    CHECK(std::string(e.what()).find("[1x3x32x32]") != std::string::npos);
  }
  const Var img = g.constant(Tensor(Shape{1, 3, 64, 64}));
  try {
    doafn_forward(g, nets.store, nets.arch, img, enc, Var());
    FAIL("expected state error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::State);
  }
  CHECK_THROWS_AS(doafn_forward(g, nets.store, nets.arch, img, g.constant(Tensor(Shape{1, 5})),
                                g.constant(Tensor(Shape{1, 1, 64, 64}))),
                  Error);

  ParameterStore other;
  other.add("doafn.flow_head.w", Tensor(Shape{2, 8, 3, 3}));
  try {
    copy_params(other, nets.store, kDoafn);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
    CHECK(std::string(e.what()).find("doafn.flow_head.w") != std::string::npos);
  }
}

TEST_CASE("background head composites with its own prediction") {
  ArchDescriptor arch = ArchDescriptor::for_size(64);
  arch.predict_background = true;
  ParameterStore store;
  std::mt19937_64 rng(9);
  init_doafn(store, arch, rng);
  ad::Graph g;
  const auto out = doafn_forward(g, store, arch, g.constant(testing::random_tensor(Shape{1, 3, 64, 64}, 10)),
                                 g.constant(one_hot(1, 1)), Var());
  CHECK(out.bg_logit.shape() == Shape{1, 1, 64, 64});
  CHECK(out.i_doafn.shape() == Shape{1, 3, 64, 64});
}

TEST_CASE("architecture descriptor") {
  const auto a = ArchDescriptor::for_size(128);
  CHECK(a.enc_widths.size() == 5);
  CHECK(a.base_size() == 4);
  CHECK(ArchDescriptor::from_json(a.to_json()) == a);
  CHECK_THROWS_AS(ArchDescriptor::for_size(96), Error);
  CHECK_THROWS_AS(ArchDescriptor::for_size(32), Error);

  ParameterStore store;
  std::mt19937_64 rng(1);
  init_baseline(store, a, rng);
  ad::Graph g;
  const Var y = baseline_forward(g, store, a, g.constant(Tensor(Shape{1, 3, 128, 128}, 0.5f)), g.constant(one_hot(1, 0)));
  CHECK(y.shape() == Shape{1, 3, 128, 128});
}
