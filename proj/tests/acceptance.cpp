// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "geometry_check.hpp"
#include "support.hpp"
#include "tvsn/autodiff/gradcheck.hpp"
#include "tvsn/core/error.hpp"
#include "tvsn/core/image_io.hpp"
#include "tvsn/data/dataset.hpp"
#include "tvsn/eval/metrics.hpp"
#include "tvsn/eval/report.hpp"
#include "tvsn/groundtruth/groundtruth.hpp"
#include "tvsn/render/procedural.hpp"
#include "tvsn/train/batch.hpp"
#include "tvsn/train/encoding.hpp"
#include "tvsn/train/pipeline.hpp"
#include "tvsn/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace tvsn;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Context {
  fs::path work;
  fs::path full_data;  // one mesh, 54 views
  fs::path tiny_data;  // one mesh, elevation 20, 8 azimuths
  fs::path run_a;
  fs::path run_b;
  bool trained_a = false;
  bool trained_b = false;
};

void generate(const fs::path& out, const data::ViewSpec& spec) {
  if (fs::exists(out / "manifest.json")) return;
  data::GenerateOptions opt;
  opt.seed = 0;
  opt.threads = 1;
  data::generate_dataset({data::procedural_source(0, "car-like")}, spec, out, opt);
}

data::ViewSpec full_spec() { return {}; }

data::ViewSpec tiny_spec() {
  data::ViewSpec spec;
  spec.elevations = {20.0};
  spec.azimuth_step = 40.0;
  spec.azimuth_count = 8;
  return spec;
}

// 1 ----------------------------------------------------------------------------
void gradients(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  int checked = 0;
  double worst_dense = 0.0;
  double worst_bilinear = 0.0;
  for (const auto& op : ad::gradcheck_ops()) {
    const auto r = ad::grad_check(op);
    const double limit = op == "bilinear_sample" ? 1e-3 : 1e-4;
    v.require(r.passed && r.max_rel_error < limit, op + " rel error " + std::to_string(r.max_rel_error));
    (op == "bilinear_sample" ? worst_bilinear : worst_dense) =
        std::max(op == "bilinear_sample" ? worst_bilinear : worst_dense, r.max_rel_error);
    ++checked;
  }
  const double t = seconds_since(t0);
  v.require(t < 120.0, "runtime");
  v.detail << checked << " ops, worst rel error " << worst_dense << " (limit 1e-4), bilinear " << worst_bilinear
           << " (limit 1e-3), " << t << " s";
}

// 2 ----------------------------------------------------------------------------
void geometry(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  const render::ObjectKind kinds[] = {render::ObjectKind::CarLike, render::ObjectKind::ChairLike};
  long compared = 0;
  long agree = 0;
  long flow_compared = 0;
  long flow_agree = 0;
  double worst = 1.0;
  bool dominates = true;
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t seed = rng();
    const auto kind = kinds[rng() % 2];
    const double az = 20.0 * static_cast<double>(rng() % 18);
    const double el = 10.0 * static_cast<double>(rng() % 4);
    const double theta = 20.0 * static_cast<double>(1 + rng() % 17);
    const auto mesh = std::make_shared<const render::Mesh>(render::make_procedural_object(seed, kind));
    const auto r = testing::compare_with_oracle(mesh, az, el, theta, 64);
    compared += r.compared;
    agree += r.vis_agree;
    flow_compared += r.flow_compared;
    flow_agree += r.flow_agree;
    worst = std::min(worst, r.vis_rate());
    dominates = dominates && r.svis_dominates;
  }
  const double vis_rate = static_cast<double>(agree) / static_cast<double>(compared);
  const double flow_rate = static_cast<double>(flow_agree) / static_cast<double>(flow_compared);
  v.require(vis_rate >= 0.995, "visibility agreement");
  v.require(flow_rate >= 0.995, "flow agreement");
  v.require(dominates, "M_s-vis >= M_vis");

  bool identity = true;
  for (int i = 0; i < 4; ++i) {
    const auto mesh = std::make_shared<const render::Mesh>(render::make_procedural_object(100 + i, kinds[i % 2]));
    const auto cam = render::make_camera(40.0 * i, 10.0 * i, 2.5, 64);
    const auto g = render::rasterize(mesh, cam);
    identity = identity && gt::visibility_map(g, g, 0.0, cam).m == g.fg;
  }
  v.require(identity, "theta = 0 visibility equals the foreground");
  const double t = seconds_since(t0);
  v.require(t < 300.0, "runtime");
  v.detail << "20 pairs, " << compared << " pixels, visibility " << 100.0 * vis_rate << "% (worst pair "
           << 100.0 * worst << "%), flow " << 100.0 * flow_rate << "%, " << t << " s";
}

// 3 ----------------------------------------------------------------------------
void warp_consistency(Verdict& v, const Context& ctx) {
  const auto manifest = data::read_manifest(ctx.full_data);
  double total = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < manifest.pairs.size(); ++i) {
    const auto s = data::load_pair(ctx.full_data, manifest, static_cast<int>(i));
    const auto flow = data::load_flow(ctx.full_data, manifest.pairs[i]);
    const gt::VisibilityMap vis{s.vis};
    const Image a = gt::mat_visibility(gt::warp(s.src_rgb, flow), vis);
    const Image b = gt::mat_visibility(s.tgt_rgb, vis);
    const double e = eval::l1_error(a, b);
    total += e;
    worst = std::max(worst, e);
  }
  const double mean = total / static_cast<double>(manifest.pairs.size());
  v.require(mean < 0.02, "mean masked L1");
  v.detail << manifest.pairs.size() << " pairs, mean masked L1 " << mean << " (worst pair " << worst << ")";
}

// 4 ----------------------------------------------------------------------------
void compositing(Verdict& v, const Context& ctx) {
  const Image src = testing::random_image(3, 64, 64, 1);
  const Image afn = testing::random_image(3, 64, 64, 2);
  const gt::VisibilityMap ones{Grid<float>(64, 64, 1.0f)};
  const gt::VisibilityMap zeros{Grid<float>(64, 64, 0.0f)};
  v.require(gt::mat_visibility(src, ones) == src, "matting with all ones");
  v.require(gt::composite_doafn(src, afn, gt::Mask{Grid<float>(64, 64, 1.0f)}, zeros) == src,
            "composite with background only");

  const auto manifest = data::read_manifest(ctx.full_data);
  long overlapping = 0;
  for (std::size_t i = 0; i < manifest.pairs.size(); ++i) {
    const auto s = data::load_pair(ctx.full_data, manifest, static_cast<int>(i));
    for (std::size_t k = 0; k < s.bg.size(); ++k) {
      overlapping += s.bg.storage()[k] > 0.0f && s.svis.storage()[k] > 0.0f;
    }
    // The composite itself also rejects overlap.
    if (i % 50 == 0) gt::composite_doafn(s.src_rgb, s.src_rgb, gt::Mask{s.bg}, gt::VisibilityMap{s.svis});
  }
  v.require(overlapping == 0, "disjoint masks");
  v.detail << "identities hold, " << manifest.pairs.size() << " pairs with " << overlapping
           << " overlapping mask pixels";
}

// 5 ----------------------------------------------------------------------------
void encoding(Verdict& v) {
  for (int m = 1; m <= 17; ++m) {
    const auto e = train::encode_transform(20.0 * m);
    for (int k = 0; k < 17; ++k) v.require(e.t[static_cast<std::size_t>(k)] == (k == m - 1 ? 1.0f : 0.0f), "one-hot");
  }
  const auto e50 = train::encode_transform(50.0);
  for (int k = 0; k < 17; ++k) v.require(e50.t[static_cast<std::size_t>(k)] == (k == 1 || k == 2 ? 0.5f : 0.0f), "theta 50");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> angle(20.0, 340.0);
  int recovered = 0;
  int ties = 0;
  for (int i = 0; i < 1000; ++i) {
    const double theta = angle(rng);
    const double nearest = 20.0 * std::round(theta / 20.0);
    if (std::abs(std::abs(theta - nearest) - 10.0) < 1e-9) {
      ++ties;
      continue;
    }
    recovered += train::decode_transform(train::encode_transform(theta).t) == nearest;
  }
  v.require(recovered + ties == 1000, "round trip");
  v.detail << "17 one-hots exact, theta 50 -> [0,0.5,0.5,0...], " << recovered << "/1000 random angles decode to the nearest bin";
}

// 6 and 8 share the training runs -----------------------------------------------

void run_pipeline(const Context& ctx, const fs::path& out) {
  const train::TrainConfig cfg;  // seed 0, desk defaults
  train::StageOptions opt;
  opt.data = ctx.tiny_data;
  opt.out = out;
  fs::create_directories(out);
  train::train_perceptual(cfg, opt);
  train::train_doafn(cfg, opt);
  train::train_completion(cfg, opt);
}

void tiny_training(Verdict& v, Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  run_pipeline(ctx, ctx.run_a);
  ctx.trained_a = true;
  const double t = seconds_since(t0);

  const auto log = train::read_log(ctx.run_a / train::log_name("doafn"));
  const double first = log.front().at("loss").get<double>();
  double last = 0.0;
  const std::size_t tail = std::min<std::size_t>(100, log.size());
  for (std::size_t i = log.size() - tail; i < log.size(); ++i) last += log[i].at("loss").get<double>();
  last /= static_cast<double>(tail);
  const double drop = first / last;
  v.require(log.size() == 3000, "3000 DOAFN steps");
  v.require(drop >= 5.0, "DOAFN loss drop");

  const train::Synthesizer doafn(ctx.run_a / train::kDoafnCheckpoint);
  const train::PairSet set(ctx.tiny_data, "all");
  long agree = 0;
  long pixels = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto p = set.sample(static_cast<int>(i));
    const auto r = doafn.run(p.src_rgb, p.theta, &p.bg);
    for (std::size_t k = 0; k < p.svis.size(); ++k) {
      agree += (r.vis.storage()[k] > 0.5f) == (p.svis.storage()[k] > 0.5f);
      ++pixels;
    }
  }
  const double vis_acc = static_cast<double>(agree) / static_cast<double>(pixels);
  v.require(vis_acc >= 0.9, "visibility accuracy");

  const auto report = eval::evaluate(ctx.tiny_data, "all", eval::model_predictor(ctx.run_a / train::kCompletionCheckpoint),
                                     "tvsn", 16, 1);
  v.require(report.l1.mean < 0.05, "completion L1");
  v.require(report.ssim.mean > 0.9, "completion SSIM");
  v.require(t < 3600.0, "runtime");
  v.detail << "(a) DOAFN loss " << first << " -> " << last << " (" << drop << "x), vis accuracy " << 100.0 * vis_acc
           << "%; (b) L1 " << report.l1.mean << ", SSIM " << report.ssim.mean << " over " << report.pairs.size()
           << " pairs; training " << t / 60.0 << " min";
}

// 7 ----------------------------------------------------------------------------
void metrics(Verdict& v, const Context& ctx) {
  const auto gt = eval::evaluate(ctx.tiny_data, "all", eval::target_predictor(), "gt", 16, 1);
  v.require(gt.l1.mean == 0.0, "GT L1");
  v.require(gt.ssim.mean == 1.0, "GT SSIM");
  for (const auto& p : gt.pairs) v.require(p.l1 == 0.0 && p.ssim == 1.0, "per-pair GT");

  const auto gray = eval::evaluate(ctx.tiny_data, "all", eval::constant_predictor(0.5f), "gray", 16, 1);
  const auto manifest = data::read_manifest(ctx.tiny_data);
  double worst = 0.0;
  double total = 0.0;
  for (const auto& p : gray.pairs) {
    const Image tgt = read_png(ctx.tiny_data / manifest.view(p.tgt).dir / data::kRgbFile);
    double acc = 0.0;
    for (float x : tgt.data()) acc += std::abs(static_cast<double>(x) - 0.5);
    const double ref = acc / static_cast<double>(tgt.size());
    worst = std::max(worst, std::abs(ref - p.l1));
    total += ref;
  }
  const double mean_diff = std::abs(total / static_cast<double>(gray.pairs.size()) - gray.l1.mean);
  v.require(worst < 1e-6 && mean_diff < 1e-6, "gray L1");
  v.detail << "GT vs GT: L1 " << gt.l1.mean << ", SSIM " << gt.ssim.mean << "; gray L1 " << gray.l1.mean
           << ", max deviation from recomputation " << std::max(worst, mean_diff);
}

// 8 ----------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void determinism(Verdict& v, Context& ctx) {
  if (!ctx.trained_a) run_pipeline(ctx, ctx.run_a), ctx.trained_a = true;
  run_pipeline(ctx, ctx.run_b);
  ctx.trained_b = true;
  int files = 0;
  long records = 0;
  for (const char* stage : {"perceptual", "doafn", "completion"}) {
    const auto a = train::read_log(ctx.run_a / train::log_name(stage));
    const auto b = train::read_log(ctx.run_b / train::log_name(stage));
    v.require(a.size() == b.size(), std::string(stage) + " log length");
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      auto x = a[i];
      auto y = b[i];
      x.erase("wall_ms");
      y.erase("wall_ms");
      if (x != y) {
        v.require(false, std::string(stage) + " log record " + std::to_string(i));
        break;
      }
      ++records;
    }
  }
  for (const char* ck : {train::kPerceptualCheckpoint, train::kDoafnCheckpoint, train::kCompletionCheckpoint}) {
    v.require(slurp(ctx.run_a / ck) == slurp(ctx.run_b / ck), ck);
    ++files;
  }
  v.detail << records << " log records identical apart from wall time, " << files << " checkpoints byte-identical";
}

// 9 ----------------------------------------------------------------------------
void schedule(Verdict& v, const Context& ctx) {
  int runs = 0;
  for (const auto& dir : {ctx.run_a, ctx.run_b}) {
    if (!fs::exists(dir / train::log_name("completion"))) continue;
    long g = 0;
    long d = 0;
    for (const auto& r : train::read_log(dir / train::log_name("completion"))) (r.at("kind") == "G" ? g : d) += 1;
    v.require(std::abs(g - 2 * d) <= 1, "run " + dir.filename().string());
    v.detail << dir.filename().string() << ": G " << g << ", D " << d << "; ";
    ++runs;
  }
  // A short run that stops inside a cycle.
  train::TrainConfig cfg;
  cfg.completion.generator_steps = 7;
  cfg.completion.batch = 2;
  train::StageOptions opt;
  opt.data = ctx.tiny_data;
  opt.out = ctx.work / "short";
  opt.perceptual_checkpoint = ctx.run_a / train::kPerceptualCheckpoint;
  opt.doafn_checkpoint = ctx.run_a / train::kDoafnCheckpoint;
  if (fs::exists(opt.doafn_checkpoint)) {
    fs::create_directories(opt.out);
    const auto r = train::train_completion(cfg, opt);
    const long g = r.summary.at("generator_steps");
    const long d = r.summary.at("discriminator_steps");
    v.require(std::abs(g - 2 * d) <= 1, "short run");
    v.detail << "7-step run: G " << g << ", D " << d;
    ++runs;
  }
  v.require(runs > 0, "no completion run available");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only;
  std::string work;
  app.add_option("--only", only, "Comma-separated criteria to run (default all)");
  app.add_option("--work", work, "Keep artifacts in this directory instead of a temporary one");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected;
  for (const auto& s : CLI::detail::split(only, ',')) {
    if (!s.empty()) selected.insert(std::stoi(s));
  }
  const auto wanted = [&](int c) { return selected.empty() || selected.count(c) > 0; };

  std::unique_ptr<testing::TempDir> tmp;
  Context ctx;
  if (work.empty()) {
    tmp = std::make_unique<testing::TempDir>("acceptance");
    ctx.work = tmp->path();
  } else {
    ctx.work = work;
    fs::create_directories(ctx.work);
  }
  ctx.full_data = ctx.work / "data54";
  ctx.tiny_data = ctx.work / "tiny";
  ctx.run_a = ctx.work / "run_a";
  ctx.run_b = ctx.work / "run_b";
  // Stale runs would make the training criteria meaningless.
  for (const auto& d : {ctx.run_a, ctx.run_b, ctx.work / "short"}) fs::remove_all(d);

  const std::vector<std::pair<int, std::function<void(Verdict&)>>> criteria = {
      {1, [&](Verdict& v) { gradients(v); }},
      {2, [&](Verdict& v) { geometry(v); }},
      {3, [&](Verdict& v) { generate(ctx.full_data, full_spec()); warp_consistency(v, ctx); }},
      {4, [&](Verdict& v) { generate(ctx.full_data, full_spec()); compositing(v, ctx); }},
      {5, [&](Verdict& v) { encoding(v); }},
      {6, [&](Verdict& v) { generate(ctx.tiny_data, tiny_spec()); tiny_training(v, ctx); }},
      {7, [&](Verdict& v) { generate(ctx.tiny_data, tiny_spec()); metrics(v, ctx); }},
      {8, [&](Verdict& v) { generate(ctx.tiny_data, tiny_spec()); determinism(v, ctx); }},
      {9, [&](Verdict& v) {
         generate(ctx.tiny_data, tiny_spec());
         if (!ctx.trained_a) run_pipeline(ctx, ctx.run_a), ctx.trained_a = true;
         schedule(v, ctx);
       }},
  };

  int failed = 0;
  for (const auto& [id, check] : criteria) {
    if (!wanted(id)) continue;
    Verdict v;
    try {
      check(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    failed += !v.pass;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " - " << v.detail.str() << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
