#include "tvsn/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "tvsn/autodiff/gradcheck.hpp"
#include "tvsn/core/error.hpp"
#include "tvsn/core/image_io.hpp"
#include "tvsn/data/dataset.hpp"
#include "tvsn/eval/report.hpp"
#include "tvsn/train/config.hpp"
#include "tvsn/train/pipeline.hpp"
#include "tvsn/train/trainer.hpp"

namespace tvsn::cli {

namespace fs = std::filesystem;

namespace {

int hardware_threads(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Grid<float> read_optional_mask(const fs::path& path) {
  if (path.empty()) return {};
  return read_png_mask(path);
}

void ensure_parent(const fs::path& file) {
  const fs::path dir = file.parent_path();
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

Image flow_magnitude(const train::Synthesis& s) {
  const int h = s.flow_y.height();
  const int w = s.flow_y.width();
  Image img(1, h, w);
  const float scale = 2.0f / static_cast<float>(std::max(h, w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float dy = s.flow_y(y, x) - static_cast<float>(y);
      const float dx = s.flow_x(y, x) - static_cast<float>(x);
      img(0, y, x) = std::min(1.0f, std::sqrt(dy * dy + dx * dx) * scale);
    }
  }
  return img;
}

}  // namespace

std::vector<fs::path> intermediate_paths(const fs::path& out) {
  const fs::path dir = out.parent_path();
  const std::string stem = out.stem().string();
  return {dir / (stem + "_vis.png"), dir / (stem + "_doafn.png"), dir / (stem + "_flowmag.png")};
}

std::string rotate_frame_name(int index, int theta) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%02d_theta%03d.png", index, theta);
  return buf;
}

int gen_data(const GenDataArgs& a, std::ostream& out) {
  if (a.out.empty()) fail(ErrorKind::Parameter, "--out is required");
  if (a.count < 0) fail(ErrorKind::Parameter, "--count must be >= 0");
  if (a.azimuth_step <= 0 || a.azimuth_step % 20 != 0 || 360 % a.azimuth_step != 0) {
    fail(ErrorKind::Parameter, "--azimuth-step must be a multiple of 20 dividing 360, got " +
                                   std::to_string(a.azimuth_step));
  }
  data::ViewSpec spec;
  spec.size = a.size;
  spec.elevations = a.elevations;
  spec.azimuth_step = a.azimuth_step;
  spec.azimuth_count = a.azimuth_count > 0 ? a.azimuth_count : 360 / a.azimuth_step;
  std::vector<data::MeshSource> meshes;
  for (int i = 0; i < a.count; ++i) meshes.push_back(data::procedural_source(a.seed + static_cast<std::uint64_t>(i), a.kind));
  for (const auto& p : a.obj) meshes.push_back(data::obj_source(p));
  if (meshes.empty()) fail(ErrorKind::Parameter, "no meshes: give --count >= 1 or --obj");
  data::GenerateOptions opts;
  opts.seed = a.seed;
  opts.threads = hardware_threads(a.threads);
  const auto m = data::generate_dataset(meshes, spec, a.out, opts);
  int train_meshes = 0;
  for (const auto& e : m.meshes) train_meshes += e.split == "train" ? 1 : 0;
  out << "meshes " << m.meshes.size() << " (train " << train_meshes << ", test " << m.meshes.size() - train_meshes
      << ")\nviews " << m.views.size() << "\npairs " << m.pairs.size() << "\nmanifest "
      << (a.out / "manifest.json").string() << '\n';
  return 0;
}

int train(const TrainArgs& a, std::ostream& out) {
  if (a.data.empty() || a.out.empty()) fail(ErrorKind::Parameter, "--data and --out are required");
  train::TrainConfig cfg = a.config.empty() ? train::TrainConfig{} : train::TrainConfig::load(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.loss.empty()) cfg.baseline.loss = a.loss;
  if (a.steps) {
    if (a.stage == "perceptual") cfg.perceptual.max_steps = *a.steps;
    if (a.stage == "doafn") cfg.doafn.steps = *a.steps;
    if (a.stage == "completion") cfg.completion.generator_steps = *a.steps;
    if (a.stage == "baseline") cfg.baseline.steps = *a.steps;
  }
  cfg.validate();
  train::StageOptions opts;
  opts.data = a.data;
  opts.out = a.out;
  opts.resume = a.resume;
  if (!a.quiet) {
    opts.on_record = [&out](const nlohmann::json& r) {
      const long k = r.contains("step") ? r.at("step").get<long>() : r.value("iteration", 0L);
      if (k % 100 == 0) out << r.dump() << '\n' << std::flush;
    };
  }
  train::StageResult res;
  if (a.stage == "perceptual") {
    res = train::train_perceptual(cfg, opts);
  } else if (a.stage == "doafn") {
    res = train::train_doafn(cfg, opts);
  } else if (a.stage == "completion") {
    res = train::train_completion(cfg, opts);
  } else if (a.stage == "baseline") {
    res = train::train_baseline(cfg, opts);
  } else {
    fail(ErrorKind::Parameter, "unknown stage '" + a.stage + "' (expected perceptual, doafn, completion or baseline)");
  }
  out << "stage " << res.stage << " done: " << res.summary.dump() << "\ncheckpoint " << res.checkpoint.string()
      << "\nlog " << res.log.string() << '\n';
  return 0;
}

int synth(const SynthArgs& a, std::ostream& out) {
  const train::Synthesizer s(a.ckpt);
  const Image input = read_png(a.input);
  const Grid<float> mask = read_optional_mask(a.bg_mask);
  if (a.dump_intermediates && s.kind() == "baseline") {
    fail(ErrorKind::Parameter, "--dump-intermediates needs a two-stage checkpoint; the baseline has no flow or visibility");
  }
  const auto r = s.run(input, a.theta, mask.empty() ? nullptr : &mask);
  ensure_parent(a.out);
  write_png(a.out, r.output);
  out << a.out.string() << '\n';
  if (a.dump_intermediates) {
    const auto paths = intermediate_paths(a.out);
    write_png_mask(paths[0], r.vis);
    write_png(paths[1], r.i_doafn);
    write_png(paths[2], flow_magnitude(r));
    for (const auto& p : paths) out << p.string() << '\n';
  }
  return 0;
}

int rotate360(const Rotate360Args& a, std::ostream& out) {
  if (a.step < 20 || 360 % a.step != 0) {
    fail(ErrorKind::Parameter, "--step must be >= 20 and divide 360, got " + std::to_string(a.step));
  }
  const train::Synthesizer s(a.ckpt);
  const Image input = read_png(a.input);
  const Grid<float> mask = read_optional_mask(a.bg_mask);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + a.out.string() + ": " + ec.message());
  std::vector<const Image*> sources;
  std::vector<double> thetas;
  std::vector<const Grid<float>*> masks;
  for (int theta = a.step; theta < 360; theta += a.step) {
    sources.push_back(&input);
    thetas.push_back(theta);
    masks.push_back(mask.empty() ? nullptr : &mask);
  }
  const auto results = s.run(sources, thetas, masks);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const fs::path p = a.out / rotate_frame_name(static_cast<int>(i), static_cast<int>(thetas[i]));
    write_png(p, results[i].output);
    out << p.string() << '\n';
  }
  return 0;
}

int eval(const EvalArgs& a, std::ostream& out) {
  if (a.data.empty()) fail(ErrorKind::Parameter, "--data is required");
  eval::Predictor predict;
  if (a.predictor == "model") {
    if (a.ckpt.empty()) fail(ErrorKind::Parameter, "--ckpt is required for the model predictor");
    predict = eval::model_predictor(a.ckpt);
  } else if (a.predictor == "gt") {
    predict = eval::target_predictor();
  } else if (a.predictor == "gray") {
    predict = eval::constant_predictor(0.5f);
  } else {
    fail(ErrorKind::Parameter, "unknown predictor '" + a.predictor + "' (expected model, gt or gray)");
  }
  auto report = eval::evaluate(a.data, a.split, predict, a.predictor, a.batch, hardware_threads(a.threads));
  if (a.predictor == "model") report.config["checkpoint"] = a.ckpt.string();
  if (!a.out.empty()) {
    ensure_parent(a.out);
    report.write_json(fs::path(a.out.string() + ".json"));
    report.write_csv(fs::path(a.out.string() + ".csv"));
  }
  out << std::setprecision(6) << "pairs " << report.pairs.size() << "\nL1   mean " << report.l1.mean << " std "
      << report.l1.std << "\nSSIM mean " << report.ssim.mean << " std " << report.ssim.std << '\n';
  return 0;
}

int gradcheck(const GradcheckArgs& a, std::ostream& out) {
  std::vector<std::string> ops;
  if (a.ops == "all") {
    ops = ad::gradcheck_ops();
  } else {
    std::stringstream ss(a.ops);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (!name.empty()) ops.push_back(name);
    }
  }
  bool ok = true;
  out << std::left << std::setw(28) << "op" << std::setw(14) << "max_rel_err" << std::setw(12) << "tolerance"
      << "result\n";
  for (const auto& op : ops) {
    const auto r = ad::grad_check(op, a.seed);
    ok = ok && r.passed;
    std::ostringstream err;
    err << std::scientific << std::setprecision(3) << r.max_rel_error;
    std::ostringstream tol;
    tol << std::scientific << std::setprecision(0) << r.tolerance;
    out << std::left << std::setw(28) << r.op << std::setw(14) << err.str() << std::setw(12) << tol.str()
        << (r.passed ? "pass" : "FAIL") << '\n';
  }
  return ok ? 0 : 1;
}

int run(int argc, char** argv) {
  CLI::App app{"Transformation-grounded novel view synthesis"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* c_gen = app.add_subcommand("gen-data", "Render meshes and ground truth into a dataset");
  c_gen->add_option("--kind", gd.kind, "Procedural kind: car-like, chair-like, block-stack");
  c_gen->add_option("--count", gd.count, "Number of procedural meshes");
  c_gen->add_option("--seed", gd.seed, "Random seed");
  c_gen->add_option("--size", gd.size, "Image size in pixels");
  c_gen->add_option("--out", gd.out, "Output directory")->required();
  c_gen->add_option("--elevations", gd.elevations, "Camera elevations in degrees")->delimiter(',');
  c_gen->add_option("--azimuth-step", gd.azimuth_step, "Azimuth spacing (multiple of 20)");
  c_gen->add_option("--azimuth-count", gd.azimuth_count, "Azimuths per elevation (default: full circle)");
  c_gen->add_option("--obj", gd.obj, "Additional OBJ meshes");
  c_gen->add_option("--threads", gd.threads, "Worker threads (0 = all cores)");

  TrainArgs tr;
  std::uint64_t train_seed = 0;
  long train_steps = 0;
  auto* c_train = app.add_subcommand("train", "Run one training stage");
  c_train->add_option("--stage", tr.stage, "perceptual | doafn | completion | baseline")->required();
  c_train->add_option("--config", tr.config, "Config JSON");
  c_train->add_option("--data", tr.data, "Dataset directory")->required();
  c_train->add_option("--out", tr.out, "Checkpoint directory")->required();
  c_train->add_flag("--resume", tr.resume, "Continue from the stage checkpoint");
  auto* o_seed = c_train->add_option("--seed", train_seed, "Override the config seed");
  auto* o_steps = c_train->add_option("--steps", train_steps, "Override the stage step cap");
  c_train->add_option("--loss", tr.loss, "Baseline loss set: l1 | vgg | adv | vgg+adv");
  c_train->add_flag("--quiet", tr.quiet, "No progress output");

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth", "Synthesize a novel view");
  c_synth->add_option("--ckpt", sy.ckpt, "Checkpoint")->required();
  c_synth->add_option("--input", sy.input, "Input PNG")->required();
  c_synth->add_option("--theta", sy.theta, "Azimuth change in degrees [20, 340]")->required();
  c_synth->add_option("--out", sy.out, "Output PNG")->required();
  c_synth->add_option("--bg-mask", sy.bg_mask, "Background mask PNG (white = background)");
  c_synth->add_flag("--dump-intermediates", sy.dump_intermediates, "Also write _vis, _doafn and _flowmag images");

  Rotate360Args ro;
  auto* c_rot = app.add_subcommand("rotate360", "Synthesize a full turn around the object");
  c_rot->add_option("--ckpt", ro.ckpt, "Checkpoint")->required();
  c_rot->add_option("--input", ro.input, "Input PNG")->required();
  c_rot->add_option("--step", ro.step, "Azimuth step in degrees");
  c_rot->add_option("--out", ro.out, "Output directory")->required();
  c_rot->add_option("--bg-mask", ro.bg_mask, "Background mask PNG (white = background)");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "L1 and SSIM over a dataset split");
  c_eval->add_option("--ckpt", ev.ckpt, "Checkpoint (model predictor)");
  c_eval->add_option("--predictor", ev.predictor, "model | gt | gray");
  c_eval->add_option("--data", ev.data, "Dataset directory")->required();
  c_eval->add_option("--split", ev.split, "train | test | all");
  c_eval->add_option("--out", ev.out, "Report prefix (.json and .csv are appended)");
  c_eval->add_option("--batch", ev.batch, "Pairs per forward pass");
  c_eval->add_option("--threads", ev.threads, "Metric threads (0 = all cores)");

  GradcheckArgs gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  c_gc->add_option("--ops", gc.ops, "all, or comma-separated op names");
  c_gc->add_option("--seed", gc.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_gen) return gen_data(gd, std::cout);
    if (*c_train) {
      if (o_seed->count() > 0) tr.seed = train_seed;
      if (o_steps->count() > 0) tr.steps = train_steps;
      return train(tr, std::cout);
    }
    if (*c_synth) return synth(sy, std::cout);
    if (*c_rot) return rotate360(ro, std::cout);
    if (*c_eval) return eval(ev, std::cout);
    if (*c_gc) return gradcheck(gc, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace tvsn::cli
