#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "tiny_dataset.hpp"
#include "tvsn/autodiff/ops.hpp"
#include "tvsn/core/error.hpp"
#include "tvsn/model/checkpoint.hpp"
#include "tvsn/model/networks.hpp"
#include "tvsn/train/batch.hpp"
#include "tvsn/train/config.hpp"
#include "tvsn/train/encoding.hpp"
#include "tvsn/train/losses.hpp"
#include "tvsn/train/trainer.hpp"

using namespace tvsn;
using namespace tvsn::train;
using ad::Shape;
using ad::Tensor;

namespace {

// t^i = 1 - (theta - i*s)/s over angle positions i*s, s = 20; index k <-> angle 20(k+1).
std::array<double, 17> appendix_encoding(double theta) {
  std::array<double, 17> t{};
  const double s = 20.0;
  const int i = static_cast<int>(std::floor(theta / s));
  const double ti = 1.0 - (theta - i * s) / s;
  t[static_cast<std::size_t>(i - 1)] = ti;
  if (i < 17) t[static_cast<std::size_t>(i)] = 1.0 - ti;
  return t;
}

}  // namespace

TEST_CASE("encoding examples") {
  const auto e40 = encode_transform(40);
  for (int k = 0; k < 17; ++k) CHECK(e40.t[static_cast<std::size_t>(k)] == (k == 1 ? 1.0f : 0.0f));
  const auto e50 = encode_transform(50);
  for (int k = 0; k < 17; ++k) CHECK(e50.t[static_cast<std::size_t>(k)] == (k == 1 || k == 2 ? 0.5f : 0.0f));
  CHECK(encode_transform(20).t[0] == 1.0f);
  CHECK(encode_transform(340).t[16] == 1.0f);
  const auto e47 = encode_transform(47);
  CHECK(e47.t[1] == doctest::Approx(0.65));
  CHECK(e47.t[2] == doctest::Approx(0.35));
  for (double bad : {0.0, 19.99, 340.01, -40.0, std::nan("")}) {
    try {
      encode_transform(bad);
      FAIL("expected parameter error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parameter);
    }
  }
}

TEST_CASE("encoding matches the interpolation formula and decodes to the nearest bin") {
  for (int m = 1; m <= 17; ++m) {
    const auto e = encode_transform(20.0 * m);
    for (int k = 0; k < 17; ++k) CHECK(e.t[static_cast<std::size_t>(k)] == (k == m - 1 ? 1.0f : 0.0f));
  }
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> angle(20.0, 340.0);
  int wrong = 0;
  for (int i = 0; i < 1000; ++i) {
    const double theta = angle(rng);
    const auto e = encode_transform(theta);
    const auto ref = appendix_encoding(theta);
    double total = 0.0;
    int nonzero = 0;
    for (int k = 0; k < 17; ++k) {
      wrong += std::abs(e.t[static_cast<std::size_t>(k)] - ref[static_cast<std::size_t>(k)]) > 1e-6;
      total += e.t[static_cast<std::size_t>(k)];
      nonzero += e.t[static_cast<std::size_t>(k)] != 0.0f;
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(nonzero <= 2);
    const double nearest = 20.0 * std::round(theta / 20.0);
    if (std::abs(std::abs(theta - nearest) - 10.0) > 1e-4) wrong += decode_transform(e.t) != nearest;
  }
  CHECK(wrong == 0);
}

TEST_CASE("loss weight defaults") {
  const LossWeights w;
  CHECK(w.alpha == 100.0);
  CHECK(w.beta == 0.001);
  CHECK(w.gamma == 1.0);
  CHECK(w.lambda == 0.0001);
}

TEST_CASE("discriminator loss limits") {
  ad::Graph g;
  const auto z = g.constant(Tensor(Shape{4, 1}, 0.0f));
  CHECK(discriminator_loss(z, z).value().item() == doctest::Approx(2.0 * std::log(2.0)));
  const auto real = g.constant(Tensor(Shape{4, 1}, 40.0f));
  const auto fake = g.constant(Tensor(Shape{4, 1}, -40.0f));
  CHECK(discriminator_loss(real, fake).value().item() < 1e-12);
}

namespace {

struct LossFixture {
  model::ArchDescriptor arch = model::ArchDescriptor::for_size(64);
  ad::ParameterStore disc;
  ad::ParameterStore perc;
  LossFixture() {
    std::mt19937_64 rng(3);
    model::init_discriminator(disc, arch, rng);
    model::init_perceptual(perc, arch, rng);
  }
  LossNets nets() { return {&disc, &perc, &arch, true, {}}; }
};

double weighted_terms(const GeneratorLoss& l, const LossWeights& w) {
  return l.adversarial.value().item() + w.alpha * l.feature_matching.value().item() +
         w.beta * l.perceptual.value().item() + w.gamma * l.l1.value().item() + w.lambda * l.tv.value().item();
}

}  // namespace

TEST_CASE("generator loss breakdown sums to the total") {
  LossFixture f;
  ad::Graph g;
  const auto fake = g.variable(testing::random_tensor(Shape{2, 3, 64, 64}, 1, 0.0f, 1.0f));
  const auto target = g.constant(testing::random_tensor(Shape{2, 3, 64, 64}, 2, 0.0f, 1.0f));
  const LossWeights w;
  const auto l = generator_loss(g, fake, target, f.nets(), w);
  CHECK(l.total.value().item() == doctest::Approx(weighted_terms(l, w)).epsilon(1e-6));
  CHECK(l.feature_matching.value().item() > 0.0);
  CHECK(l.perceptual.value().item() > 0.0);
}

TEST_CASE("a perfect generator against a saturated discriminator leaves only the TV term") {
  LossFixture f;
  f.disc.get("disc.fc.b").value.fill(60.0f);
  ad::Graph g;
  const Tensor img = testing::random_tensor(Shape{2, 3, 64, 64}, 4, 0.0f, 1.0f);
  const auto l = generator_loss(g, g.constant(img), g.constant(img), f.nets(), LossWeights{});
  const double tv = ad::tv_loss(g.constant(img)).value().item();
  CHECK(l.adversarial.value().item() < 1e-12);
  CHECK(l.feature_matching.value().item() == 0.0);
  CHECK(l.perceptual.value().item() == 0.0);
  CHECK(l.l1.value().item() == 0.0);
  CHECK(l.total.value().item() == doctest::Approx(1e-4 * tv).epsilon(1e-5));
}

TEST_CASE("weights (0,0,1,0) without networks reduce to plain L1") {
  ad::Graph g;
  const auto a = g.constant(testing::random_tensor(Shape{2, 3, 64, 64}, 5, 0.0f, 1.0f));
  const auto b = g.constant(testing::random_tensor(Shape{2, 3, 64, 64}, 6, 0.0f, 1.0f));
  LossNets none;
  none.adversarial = false;
  const auto l = generator_loss(g, a, b, none, LossWeights{0, 0, 1, 0});
  CHECK(l.total.value().item() == doctest::Approx(ad::l1_loss(a, b).value().item()).epsilon(1e-7));
  try {
    generator_loss(g, a, b, none, LossWeights{});
    FAIL("expected state error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::State);
  }
}

TEST_CASE("DOAFN loss with ground-truth flow and visibility is near zero") {
  const auto& root = testing::tiny_dataset();
  const auto manifest = data::read_manifest(root / "manifest.json");
  int checked = 0;
  for (int p : {0, 9, 30}) {
    const auto sample = data::load_pair(root, manifest, p);
    const auto flow = data::load_flow(root, manifest.pairs[static_cast<std::size_t>(p)]);
    ad::Graph g;
    const auto src = g.constant(stack_images({&sample.src_rgb}));
    const auto tgt = g.constant(stack_images({&sample.tgt_rgb}));
    const auto vis = g.constant(stack_masks({&sample.vis}));
    const auto bg = g.constant(stack_masks({&sample.bg}));
    Tensor ft(Shape{1, 2, 64, 64});
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const bool ok = flow.valid(y, x) > 0.5f;
        ft[static_cast<std::size_t>(y * 64 + x)] = ok ? flow.fy(y, x) : -100.0f;
        ft[static_cast<std::size_t>(4096 + y * 64 + x)] = ok ? flow.fx(y, x) : -100.0f;
      }
    model::DoafnOutput out;
    out.flow = g.constant(ft);
    Tensor logits(Shape{1, 1, 64, 64});
    for (std::size_t i = 0; i < 4096; ++i) logits[i] = sample.vis.storage()[i] > 0.5f ? 20.0f : -20.0f;
    out.vis_logit = g.constant(logits);
    out.vis = ad::sigmoid(out.vis_logit);
    out.afn = ad::bilinear_sample(src, out.flow);
    out.i_doafn = ad::add(ad::mul_mask(src, bg), ad::mul_mask(out.afn, ad::mul(out.vis, ad::affine(bg, -1, 1))));
    const auto l = doafn_loss(out, tgt, vis, bg, 1.0, 0.1);
    CHECK(l.total.value().item() < 0.02);
    CHECK(l.total.value().item() ==
          doctest::Approx(l.reconstruction.value().item() + 0.1 * l.visibility.value().item()).epsilon(1e-6));

    // Predicting nothing visible on a visible target costs more than log 2.
    out.vis_logit = g.constant(Tensor(Shape{1, 1, 64, 64}, -5.0f));
    const auto all_visible = g.constant(Tensor(Shape{1, 1, 64, 64}, 1.0f));
    CHECK(doafn_loss(out, tgt, all_visible, bg, 1.0, 1.0).visibility.value().item() > std::log(2.0));
    ++checked;
  }
  CHECK(checked == 3);
}

TEST_CASE("index stream yields seeded epoch permutations") {
  IndexStream a(7, 1, 21);
  IndexStream b(7, 1, 21);
  IndexStream c(7, 1, 31);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::set<int> seen;
    for (int i = 0; i < 7; ++i) seen.insert(a.at(static_cast<std::uint64_t>(epoch * 7 + i)));
    CHECK(seen.size() == 7);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 6);
  }
  CHECK(a.take(12, 5) == b.take(12, 5));
  // Random access agrees with sequential access.
  const auto seq = b.take(0, 21);
  for (int p = 20; p >= 0; --p) CHECK(a.at(static_cast<std::uint64_t>(p)) == seq[static_cast<std::size_t>(p)]);
  CHECK(c.take(0, 21) != seq);
}

TEST_CASE("pair batches stack the dataset tensors") {
  PairSet set(testing::tiny_dataset(), "train");
  CHECK(set.size() == 56);
  const auto b = set.batch({0, 5});
  CHECK(b.source.shape() == Shape{2, 3, 64, 64});
  CHECK(b.svis.shape() == Shape{2, 1, 64, 64});
  CHECK(b.encoding.shape() == Shape{2, 17});
  const auto theta = set.manifest().pairs[static_cast<std::size_t>(set.pairs()[5])].theta;
  const auto enc = encode_transform(theta);
  for (int k = 0; k < 17; ++k) CHECK(b.encoding[static_cast<std::size_t>(17 + k)] == enc.t[static_cast<std::size_t>(k)]);
  CHECK_THROWS_AS(PairSet(testing::tiny_dataset(), "test").batch({0}), Error);
}

TEST_CASE("config round trip and validation") {
  TrainConfig c;
  CHECK(c.completion.ratio == 2);
  c.seed = 9;
  c.doafn.steps = 17;
  c.completion.weights.alpha = 3.0;
  c.completion.real_sample = "source";
  c.completion.disc_noise = 0.25;
  const auto back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(TrainConfig::from_json(nlohmann::json::object()).to_json() == TrainConfig{}.to_json());
  for (const char* bad : {R"({"doafn":{"batch":0}})", R"({"completion":{"real_sample":"noise"}})",
                          R"({"completion":{"weights":{"alpha":-1}}})", R"({"completion":{"ratio":0}})",
                          R"({"baseline":{"disc_noise":-0.1}})"}) {
    INFO(bad);
    try {
      TrainConfig::from_json(nlohmann::json::parse(bad));
      FAIL("expected parameter error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parameter);
    }
  }
}

namespace {

TrainConfig quick_config() {
  TrainConfig c;
  c.seed = 3;
  c.perceptual.max_steps = 4;
  c.perceptual.eval_every = 2;
  c.doafn.steps = 6;
  c.doafn.batch = 2;
  c.doafn.checkpoint_every = 4;
  c.completion.generator_steps = 4;
  c.completion.batch = 2;
  c.completion.checkpoint_every = 3;
  return c;
}

std::vector<char> bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("staged training: prerequisites, counters, frozen parts and resume") {
  testing::TempDir dir("train");
  const TrainConfig cfg = quick_config();
  StageOptions opt;
  opt.data = testing::tiny_dataset();
  opt.out = dir.path();

  try {
    train_completion(cfg, opt);
    FAIL("expected state error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::State);
    CHECK(std::string(e.what()).find("doafn") != std::string::npos);
  }
  const auto perc = train_perceptual(cfg, opt);
  CHECK(perc.steps <= 4);

  const auto doafn = train_doafn(cfg, opt);
  CHECK(doafn.steps == 6);
  const auto log = read_log(doafn.log);
  REQUIRE(log.size() == 6);
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(log[i].at("step") == static_cast<long>(i));
    CHECK(std::isfinite(log[i].at("loss").get<double>()));
  }

  // Resuming a stopped run reproduces the uninterrupted checkpoint.
  testing::TempDir split("train_split");
  StageOptions part = opt;
  part.out = split.path();
  part.perceptual_checkpoint = perc.checkpoint;
  part.stop_after = 4;
  CHECK(train_doafn(cfg, part).steps == 4);
  part.stop_after = 0;
  part.resume = true;
  CHECK(train_doafn(cfg, part).steps == 6);
  CHECK(bytes(split / kDoafnCheckpoint) == bytes(doafn.checkpoint));
  const auto resumed_log = read_log(split / log_name("doafn"));
  REQUIRE(resumed_log.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) CHECK(resumed_log[i].at("loss") == log[i].at("loss"));

  const auto comp = train_completion(cfg, opt);
  const long g = comp.summary.at("generator_steps");
  const long d = comp.summary.at("discriminator_steps");
  CHECK(g == 4);
  CHECK(d == 2);
  CHECK(comp.summary.at("iterations") == 6);
  CHECK(comp.summary.at("frozen_unchanged") == true);
  // The split run stops after a whole cycle and resumes into the next one.
  part.resume = false;
  part.stop_after = 2;
  part.doafn_checkpoint = doafn.checkpoint;
  const auto first = train_completion(cfg, part);
  CHECK(first.summary.at("discriminator_steps") == 1);
  part.stop_after = 0;
  part.resume = true;
  train_completion(cfg, part);
  CHECK(bytes(split / kCompletionCheckpoint) == bytes(comp.checkpoint));

  // Discriminator input noise takes part in the updates.
  testing::TempDir clean("train_clean");
  TrainConfig no_noise = cfg;
  no_noise.completion.disc_noise = 0.0;
  StageOptions c_opt = opt;
  c_opt.out = clean.path();
  c_opt.perceptual_checkpoint = perc.checkpoint;
  c_opt.doafn_checkpoint = doafn.checkpoint;
  train_completion(no_noise, c_opt);
  const auto noisy_ck = model::load_checkpoint(comp.checkpoint);
  const auto clean_ck = model::load_checkpoint(clean / kCompletionCheckpoint);
  bool differs = false;
  for (const auto& p : noisy_ck.params.all()) {
    if (p.name.starts_with(model::kCompletion)) differs = differs || !(clean_ck.params.get(p.name).value == p.value);
  }
  CHECK(differs);

  const auto ck = model::load_checkpoint(comp.checkpoint);
  const auto before = model::load_checkpoint(doafn.checkpoint);
  for (const auto& p : before.params.all()) {
    if (p.name.starts_with(model::kDoafn)) CHECK(ck.params.get(p.name).value == p.value);
  }
}

TEST_CASE("baseline stage trains the single network") {
  testing::TempDir dir("baseline");
  TrainConfig cfg = quick_config();
  cfg.baseline.steps = 3;
  cfg.baseline.batch = 2;
  StageOptions opt;
  opt.data = testing::tiny_dataset();
  opt.out = dir.path();
  const auto r = train_baseline(cfg, opt);
  CHECK(r.steps == 3);
  CHECK(r.summary.at("loss_set") == "l1");
  CHECK(std::filesystem::exists(dir / kBaselineCheckpoint));
}
