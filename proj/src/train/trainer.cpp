#include "tvsn/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "tvsn/autodiff/ops.hpp"
#include "tvsn/autodiff/optimizer.hpp"
#include "tvsn/core/error.hpp"
#include "tvsn/core/image_io.hpp"
#include "tvsn/model/checkpoint.hpp"
#include "tvsn/model/networks.hpp"
#include "tvsn/train/batch.hpp"

namespace tvsn::train {

namespace fs = std::filesystem;
using nlohmann::json;
using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

// Distinct seeds per purpose so stages never share random streams.
enum Salt : std::uint64_t { kInitSalt = 11, kPerceptualSalt = 21, kDoafnSalt = 31, kCompletionSalt = 41, kBaselineSalt = 51 };

std::mt19937_64 init_rng(const TrainConfig& c, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                    static_cast<std::uint32_t>(kInitSalt), static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

model::ArchDescriptor arch_for(const TrainConfig& c) {
  auto a = model::ArchDescriptor::for_size(c.image_size);
  a.predict_background = c.predict_background;
  return a;
}

class JsonlLog {
 public:
  // Keeps records whose `key` is below `keep_below`, drops the rest.
  JsonlLog(const fs::path& path, const std::string& key, long keep_below) : path_(path) {
    std::vector<std::string> kept;
    if (keep_below > 0) {
      for (const auto& r : read_log(path)) {
        if (r.value(key, -1L) < keep_below) kept.push_back(r.dump());
      }
    }
    out_.open(path, std::ios::trunc);
    if (!out_) fail(ErrorKind::Io, "cannot write log " + path.string());
    for (const auto& line : kept) out_ << line << '\n';
  }

  void write(const json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
    if (!out_) fail(ErrorKind::Io, "write failed: " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

double wall_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

fs::path prerequisite(const fs::path& given, const fs::path& out, const char* name, const std::string& stage) {
  const fs::path p = given.empty() ? out / name : given;
  if (!fs::exists(p)) {
    fail(ErrorKind::State, "the " + stage + " stage must be trained first: missing checkpoint " + p.string());
  }
  return p;
}

void check_arch(const model::ArchDescriptor& have, const model::ArchDescriptor& want, const fs::path& path) {
  if (!(have == want)) {
    fail(ErrorKind::State, path.string() + " was trained with a different architecture: " + have.to_json().dump() +
                               " vs " + want.to_json().dump());
  }
}

void ensure_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + out.string() + ": " + ec.message());
}

std::vector<TensorEntry> optimizer_entries(const ad::Adam& opt, const std::string& tag) {
  TensorFile f;
  opt.save(f, tag);
  return f.entries;
}

// Runs `body` and prefixes any error with the step that raised it.
template <typename Fn>
void at_step(long step, Fn&& body) {
  try {
    body();
  } catch (const Error& e) {
    fail(e.kind(), "step " + std::to_string(step) + ": " + e.what());
  }
}

json with_terms(json record, const std::map<std::string, Var>& terms) {
  json t = json::object();
  for (const auto& [k, v] : terms) {
    if (v.valid()) t[k] = v.value().item();
  }
  record["terms"] = t;
  return record;
}

double mean_of_last(const std::vector<double>& xs, std::size_t n) {
  if (xs.empty()) return std::nan("");
  const std::size_t k = std::min(n, xs.size());
  double acc = 0.0;
  for (std::size_t i = xs.size() - k; i < xs.size(); ++i) acc += xs[i];
  return acc / static_cast<double>(k);
}

// Loss history of a stage from its log, for summaries that survive resumes.
std::vector<double> losses_from_log(const fs::path& log, const std::string& kind_filter = "") {
  std::vector<double> out;
  for (const auto& r : read_log(log)) {
    if (!kind_filter.empty() && r.value("kind", std::string()) != kind_filter) continue;
    if (r.contains("loss")) out.push_back(r.at("loss").get<double>());
  }
  return out;
}

void load_perceptual(ad::ParameterStore& store, const model::ArchDescriptor& arch, const fs::path& path) {
  auto ck = model::load_checkpoint(path);
  check_arch(ck.arch, arch, path);
  model::copy_params(ck.params, store, model::kPerceptual);
  store.set_frozen(model::kPerceptual, true);
}

}  // namespace

std::string log_name(const std::string& stage) { return stage + "_log.jsonl"; }

std::vector<json> read_log(const fs::path& path) {
  std::vector<json> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception&) {
      break;  // torn final line from an interrupted run
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

StageResult train_perceptual(const TrainConfig& config, const StageOptions& options) {
  config.validate();
  ensure_out(options.out);
  const auto arch = arch_for(config);
  const PairSet set(options.data, options.split);
  if (set.image_size() != arch.size) {
    fail(ErrorKind::Parameter, "dataset size " + std::to_string(set.image_size()) + " != config image_size " +
                                   std::to_string(arch.size));
  }

  // Every view of the split, labelled by its azimuth bin.
  std::vector<int> view_ids;
  std::vector<int> labels;
  std::map<int, bool> seen;
  for (int p : set.pairs()) {
    for (int v : {set.manifest().pairs[static_cast<std::size_t>(p)].src, set.manifest().pairs[static_cast<std::size_t>(p)].tgt}) {
      if (seen[v]) continue;
      seen[v] = true;
      view_ids.push_back(v);
      const long bin = std::lround(set.manifest().view(v).azimuth / 20.0);
      labels.push_back(static_cast<int>(((bin % arch.perc_classes) + arch.perc_classes) % arch.perc_classes));
    }
  }
  std::map<int, int> bins;
  for (int l : labels) ++bins[l];
  if (bins.size() < 2) fail(ErrorKind::Parameter, "perceptual pretraining needs views from at least 2 azimuth bins");

  ad::ParameterStore store;
  auto rng = init_rng(config, kPerceptualSalt);
  model::init_perceptual(store, arch, rng);
  const fs::path ckpt = options.out / kPerceptualCheckpoint;
  const fs::path log_path = options.out / log_name("perceptual");
  JsonlLog log(log_path, "step", 0);

  const auto batch_of = [&](const std::vector<int>& slots) {
    std::vector<const Image*> imgs;
    std::vector<int> ys;
    for (int s : slots) {
      imgs.push_back(&set.view_rgb(view_ids[static_cast<std::size_t>(s)]));
      ys.push_back(labels[static_cast<std::size_t>(s)]);
    }
    return std::pair{stack_images(imgs), ys};
  };
  const auto accuracy = [&] {
    int correct = 0;
    for (std::size_t first = 0; first < view_ids.size(); first += 32) {
      std::vector<int> slots;
      for (std::size_t i = first; i < std::min(view_ids.size(), first + 32); ++i) slots.push_back(static_cast<int>(i));
      auto [x, ys] = batch_of(slots);
      Graph g;
      const auto feats = model::perceptual_features(g, store, arch, g.constant(std::move(x)), false);
      const Var logits = model::perceptual_logits(g, store, arch, feats, false);
      for (std::size_t i = 0; i < ys.size(); ++i) {
        const float* row = logits.value().data() + i * static_cast<std::size_t>(arch.perc_classes);
        const int pred = static_cast<int>(std::max_element(row, row + arch.perc_classes) - row);
        correct += pred == ys[i] ? 1 : 0;
      }
    }
    return static_cast<double>(correct) / static_cast<double>(view_ids.size());
  };

  long step = 0;
  double acc = accuracy();
  const auto t0 = std::chrono::steady_clock::now();
  if (!config.perceptual.random_weights) {
    ad::AdamConfig ac;
    ac.schedule = config.perceptual.lr;
    ad::Adam opt(store, "perceptual", ac);
    IndexStream stream(view_ids.size(), config.seed, kPerceptualSalt);
    const long cap = options.stop_after > 0 ? std::min(options.stop_after, config.perceptual.max_steps)
                                            : config.perceptual.max_steps;
    while (step < cap && acc < config.perceptual.target_accuracy) {
      at_step(step, [&] {
        const int b = std::min<int>(config.perceptual.batch, static_cast<int>(view_ids.size()));
        auto [x, ys] = batch_of(stream.take(static_cast<std::uint64_t>(step) * b, b));
        store.zero_grad();
        Graph g;
        const auto feats = model::perceptual_features(g, store, arch, g.constant(std::move(x)), true);
        const Var loss = ad::softmax_cross_entropy(model::perceptual_logits(g, store, arch, feats, true), ys);
        g.backward(loss);
        opt.step();
        json rec{{"stage", "perceptual"}, {"step", step}, {"loss", loss.value().item()}, {"lr", opt.current_lr()}};
        ++step;
        if (step % config.perceptual.eval_every == 0 || step == cap) {
          acc = accuracy();
          rec["accuracy"] = acc;
        }
        rec["wall_ms"] = wall_ms(t0);
        log.write(rec);
        if (options.on_record) options.on_record(rec);
      });
    }
  }
  store.set_frozen(model::kPerceptual, true);
  json meta{{"stage", "perceptual"}, {"step", step}, {"accuracy", acc}, {"config", config.to_json()}};
  model::save_checkpoint(ckpt, arch, store, meta, {model::kPerceptual});
  return {"perceptual", step, ckpt, log_path, {{"steps", step}, {"accuracy", acc}, {"views", view_ids.size()}}};
}

// ---------------------------------------------------------------------------

StageResult train_doafn(const TrainConfig& config, const StageOptions& options) {
  config.validate();
  ensure_out(options.out);
  const auto arch = arch_for(config);
  const PairSet set(options.data, options.split);
  if (set.image_size() != arch.size) {
    fail(ErrorKind::Parameter, "dataset size " + std::to_string(set.image_size()) + " != config image_size " +
                                   std::to_string(arch.size));
  }
  const DoafnConfig& dc = config.doafn;
  const fs::path ckpt = options.out / kDoafnCheckpoint;
  const fs::path log_path = options.out / log_name("doafn");

  ad::ParameterStore store;
  auto rng = init_rng(config, kDoafnSalt);
  model::init_doafn(store, arch, rng);
  ad::AdamConfig ac;
  ac.schedule = dc.lr;
  ad::Adam opt(store, model::kDoafn, ac);

  long step = 0;
  if (options.resume && fs::exists(ckpt)) {
    auto ck = model::load_checkpoint(ckpt);
    check_arch(ck.arch, arch, ckpt);
    model::copy_params(ck.params, store, model::kDoafn);
    opt.load(ck.file, "adam.doafn");
    step = ck.meta.at("step").get<long>();
  }
  JsonlLog log(log_path, "step", step);
  IndexStream stream(set.size(), config.seed, kDoafnSalt);
  const int b = dc.batch;
  const long cap = options.stop_after > 0 ? std::min(dc.steps, step + options.stop_after) : dc.steps;

  const auto save = [&](long s) {
    json meta{{"stage", "doafn"}, {"step", s}, {"config", config.to_json()}};
    model::save_checkpoint(ckpt, arch, store, meta, {model::kDoafn}, optimizer_entries(opt, "adam.doafn"));
  };

  const auto t0 = std::chrono::steady_clock::now();
  while (step < cap) {
    at_step(step, [&] {
      const PairBatch batch = set.batch(stream.take(static_cast<std::uint64_t>(step) * b, b));
      store.zero_grad();
      Graph g;
      const Var src = g.constant(batch.source);
      const Var bg = g.constant(batch.bg);
      const auto out = model::doafn_forward(g, store, arch, src, g.constant(batch.encoding), bg);
      const Var mask = g.constant(dc.vis_target == "svis" ? batch.svis : batch.vis);
      const auto loss = doafn_loss(out, g.constant(batch.target), mask, bg, dc.flow_weight, dc.vis_weight);
      g.backward(loss.total);
      const double lr = opt.current_lr();
      opt.step();
      json rec = with_terms({{"stage", "doafn"}, {"step", step}, {"loss", loss.total.value().item()}, {"lr", lr}},
                            {{"reconstruction", loss.reconstruction},
                             {"visibility", loss.visibility},
                             {"background", loss.background}});
      rec["wall_ms"] = wall_ms(t0);
      log.write(rec);
      if (options.on_record) options.on_record(rec);
      ++step;
      if (step % dc.checkpoint_every == 0 || step == cap) save(step);
    });
  }
  if (!fs::exists(ckpt)) save(step);

  const auto losses = losses_from_log(log_path);
  json summary{{"steps", step},
               {"initial_loss", losses.empty() ? std::nan("") : losses.front()},
               {"final_loss", mean_of_last(losses, 100)}};
  return {"doafn", step, ckpt, log_path, summary};
}

// ---------------------------------------------------------------------------

namespace {

// Shared adversarial loop for the completion network and the baseline.
struct AdversarialSetup {
  std::string stage;
  std::uint64_t salt;
  int batch;
  long generator_steps;
  int ratio;
  bool use_discriminator;
  bool adversarial_term;
  LossWeights weights;
  bool literal_l1;     // L1 between source and target (constant in G)
  bool source_is_real; // discriminator's real sample is the source view
  double disc_noise;
  long checkpoint_every;
  std::vector<std::string> generator_prefixes;  // parameters updated in G steps
  std::vector<std::string> saved_prefixes;
  // Builds the generator output; `joint` tracks DOAFN parameters as well.
  std::function<Var(Graph&, const PairBatch&, bool track)> generate;
};

StageResult run_adversarial(const TrainConfig& config, const StageOptions& options, ad::ParameterStore& store,
                            const model::ArchDescriptor& arch, const AdversarialSetup& s,
                            const ad::LrSchedule& g_lr, const ad::LrSchedule& d_lr, const PairSet& set,
                            const fs::path& ckpt) {
  const fs::path log_path = options.out / log_name(s.stage);
  std::vector<std::unique_ptr<ad::Adam>> g_opts;
  for (const auto& prefix : s.generator_prefixes) {
    ad::AdamConfig ac;
    ac.schedule = g_lr;
    g_opts.push_back(std::make_unique<ad::Adam>(store, prefix, ac));
  }
  std::unique_ptr<ad::Adam> d_opt;
  if (s.use_discriminator) {
    ad::AdamConfig ac;
    ac.schedule = d_lr;
    d_opt = std::make_unique<ad::Adam>(store, model::kDiscriminator, ac);
  }

  long iteration = 0;
  long g_steps = 0;
  long d_steps = 0;
  if (options.resume && fs::exists(ckpt)) {
    auto ck = model::load_checkpoint(ckpt);
    check_arch(ck.arch, arch, ckpt);
    for (const auto& prefix : s.saved_prefixes) model::copy_params(ck.params, store, prefix);
    for (std::size_t i = 0; i < g_opts.size(); ++i) g_opts[i]->load(ck.file, "adam.g" + std::to_string(i));
    if (d_opt) d_opt->load(ck.file, "adam.d");
    iteration = ck.meta.at("iteration").get<long>();
    g_steps = ck.meta.at("generator_steps").get<long>();
    d_steps = ck.meta.at("discriminator_steps").get<long>();
  }
  JsonlLog log(log_path, "iteration", iteration);
  IndexStream stream(set.size(), config.seed, s.salt);
  const int cycle = s.use_discriminator ? s.ratio + 1 : 1;
  const long g_cap = options.stop_after > 0 ? std::min(s.generator_steps, g_steps + options.stop_after)
                                            : s.generator_steps;

  const auto save = [&] {
    json meta{{"stage", s.stage},
              {"iteration", iteration},
              {"generator_steps", g_steps},
              {"discriminator_steps", d_steps},
              {"config", config.to_json()}};
    std::vector<TensorEntry> extra;
    for (std::size_t i = 0; i < g_opts.size(); ++i) {
      auto e = optimizer_entries(*g_opts[i], "adam.g" + std::to_string(i));
      extra.insert(extra.end(), e.begin(), e.end());
    }
    if (d_opt) {
      auto e = optimizer_entries(*d_opt, "adam.d");
      extra.insert(extra.end(), e.begin(), e.end());
    }
    model::save_checkpoint(ckpt, arch, store, meta, s.saved_prefixes, extra);
  };

  LossNets nets;
  nets.arch = &arch;
  nets.discriminator = s.use_discriminator ? &store : nullptr;
  nets.adversarial = s.use_discriminator && s.adversarial_term;
  nets.perceptual = s.weights.beta > 0.0 ? &store : nullptr;

  const auto t0 = std::chrono::steady_clock::now();
  const auto d_turn_at = [&](long it) { return s.use_discriminator && (it % cycle) == s.ratio; };
  // A run ends with the discriminator step that closes its last cycle.
  const auto more = [&] { return g_steps < g_cap || d_turn_at(iteration); };
  while (more()) {
    at_step(iteration, [&] {
      const bool d_turn = d_turn_at(iteration);
      const PairBatch batch = set.batch(stream.take(static_cast<std::uint64_t>(iteration) * s.batch, s.batch));
      store.zero_grad();
      Graph g;
      json rec{{"stage", s.stage}, {"iteration", iteration}};
      // Instance noise, drawn per iteration so that resumed runs match.
      std::mt19937_64 noise_rng(static_cast<std::uint64_t>(iteration) * 0x9E3779B97F4A7C15ULL ^ (config.seed + s.salt));
      const auto noisy = [&](const Var& x) {
        if (s.disc_noise <= 0.0) return x;
        return ad::add(x, g.constant(Tensor::normal(x.shape(), noise_rng, static_cast<float>(s.disc_noise))));
      };
      if (!d_turn) {
        // The same draw perturbs fake and target so feature matching stays paired.
        Tensor shared;
        nets.disc_input = [&](const Var& x) {
          if (s.disc_noise <= 0.0) return x;
          if (shared.empty()) shared = Tensor::normal(x.shape(), noise_rng, static_cast<float>(s.disc_noise));
          return ad::add(x, g.constant(shared));
        };
        const Var fake = s.generate(g, batch, true);
        const Var target = g.constant(batch.target);
        GeneratorLoss loss = generator_loss(g, fake, target, nets, s.weights);
        if (s.literal_l1) {
          // Literal reading: the L1 term compares the input with the target.
          loss.l1 = ad::l1_loss(g.constant(batch.source), target);
          loss.total = ad::weighted_sum({{nets.adversarial ? 1.0f : 0.0f, loss.adversarial},
                                         {static_cast<float>(s.weights.alpha), loss.feature_matching},
                                         {static_cast<float>(s.weights.beta), loss.perceptual},
                                         {static_cast<float>(s.weights.gamma), loss.l1},
                                         {static_cast<float>(s.weights.lambda), loss.tv}});
        }
        g.backward(loss.total);
        rec["lr"] = g_opts.front()->current_lr();
        for (auto& o : g_opts) o->step();
        ++g_steps;
        rec["kind"] = "G";
        rec["loss"] = loss.total.value().item();
        rec = with_terms(rec, {{"adversarial", loss.adversarial},
                               {"feature_matching", loss.feature_matching},
                               {"perceptual", loss.perceptual},
                               {"l1", loss.l1},
                               {"tv", loss.tv}});
      } else {
        const Var fake = s.generate(g, batch, false);
        const Var real = g.constant(s.source_is_real ? batch.source : batch.target);
        const auto dr = model::discriminator_forward(g, store, arch, noisy(real), true);
        const auto df = model::discriminator_forward(g, store, arch, noisy(fake), true);
        const Var loss = discriminator_loss(dr.logit, df.logit);
        g.backward(loss);
        rec["lr"] = d_opt->current_lr();
        d_opt->step();
        ++d_steps;
        rec["kind"] = "D";
        rec["loss"] = loss.value().item();
        double pr = 0.0;
        double pf = 0.0;
        for (std::size_t i = 0; i < dr.logit.value().numel(); ++i) {
          pr += 1.0 / (1.0 + std::exp(-dr.logit.value()[i]));
          pf += 1.0 / (1.0 + std::exp(-df.logit.value()[i]));
        }
        rec["d_real"] = pr / static_cast<double>(dr.logit.value().numel());
        rec["d_fake"] = pf / static_cast<double>(df.logit.value().numel());
      }
      rec["generator_steps"] = g_steps;
      rec["discriminator_steps"] = d_steps;
      rec["wall_ms"] = wall_ms(t0);
      log.write(rec);
      if (options.on_record) options.on_record(rec);
      ++iteration;
      if ((!d_turn && g_steps % s.checkpoint_every == 0) || !more()) save();
    });
  }
  if (!fs::exists(ckpt)) save();

  const auto g_losses = losses_from_log(log_path, "G");
  std::vector<double> l1s;
  for (const auto& r : read_log(log_path)) {
    if (r.value("kind", std::string()) == "G") l1s.push_back(r.at("terms").at("l1").get<double>());
  }
  json summary{{"iterations", iteration},
               {"generator_steps", g_steps},
               {"discriminator_steps", d_steps},
               {"initial_loss", g_losses.empty() ? std::nan("") : g_losses.front()},
               {"final_loss", mean_of_last(g_losses, 100)},
               {"final_l1", mean_of_last(l1s, 100)}};
  return {s.stage, g_steps, ckpt, log_path, summary};
}

}  // namespace

StageResult train_completion(const TrainConfig& config, const StageOptions& options) {
  config.validate();
  ensure_out(options.out);
  const auto arch = arch_for(config);
  const CompletionConfig& cc = config.completion;
  const fs::path doafn_path = prerequisite(options.doafn_checkpoint, options.out, kDoafnCheckpoint, "doafn");
  const bool need_perceptual = cc.weights.beta > 0.0;
  fs::path perceptual_path;
  if (need_perceptual) {
    perceptual_path = prerequisite(options.perceptual_checkpoint, options.out, kPerceptualCheckpoint, "perceptual");
  }
  const PairSet set(options.data, options.split);
  if (set.image_size() != arch.size) {
    fail(ErrorKind::Parameter, "dataset size " + std::to_string(set.image_size()) + " != config image_size " +
                                   std::to_string(arch.size));
  }

  ad::ParameterStore store;
  auto rng = init_rng(config, kCompletionSalt);
  model::init_doafn(store, arch, rng);
  model::init_completion(store, arch, rng);
  model::init_discriminator(store, arch, rng);
  model::init_perceptual(store, arch, rng);
  {
    auto ck = model::load_checkpoint(doafn_path);
    check_arch(ck.arch, arch, doafn_path);
    model::copy_params(ck.params, store, model::kDoafn);
  }
  if (need_perceptual) load_perceptual(store, arch, perceptual_path);
  store.set_frozen(model::kPerceptual, true);
  store.set_frozen(model::kPerceptualHead, true);

  const fs::path ckpt = options.out / kCompletionCheckpoint;
  std::vector<std::string> saved{model::kDoafn, model::kCompletion, model::kDiscriminator, model::kPerceptual};

  AdversarialSetup s;
  s.stage = "completion";
  s.salt = kCompletionSalt;
  s.batch = cc.batch;
  s.ratio = cc.ratio;
  s.use_discriminator = cc.use_discriminator;
  s.adversarial_term = true;
  s.weights = cc.weights;
  s.literal_l1 = cc.l1_reference == "source";
  s.source_is_real = cc.real_sample == "source";
  s.disc_noise = cc.disc_noise;
  s.checkpoint_every = cc.checkpoint_every;
  s.saved_prefixes = saved;

  const auto frozen_before = [&] {
    std::vector<Tensor> v;
    for (const auto* p : store.with_prefix(model::kPerceptual)) v.push_back(p->value);
    return v;
  }();

  auto generate = [&](bool joint) {
    return [&arch, &store, joint](Graph& g, const PairBatch& b, bool track) {
      const auto d = model::doafn_forward(g, store, arch, g.constant(b.source), g.constant(b.encoding),
                                          g.constant(b.bg), track && joint);
      return model::completion_forward(g, store, arch, d.i_doafn, d.bottleneck, track);
    };
  };

  store.set_frozen(model::kDoafn, true);
  s.generator_steps = cc.generator_steps;
  s.generator_prefixes = {model::kCompletion};
  s.generate = generate(false);
  StageResult result = run_adversarial(config, options, store, arch, s, cc.lr, cc.disc_lr, set, ckpt);

  if (cc.joint_finetune && cc.joint_steps > 0) {
    AdversarialSetup joint = s;
    joint.stage = "completion_joint";
    joint.generator_steps = cc.joint_steps;
    joint.generator_prefixes = {model::kCompletion, model::kDoafn};
    joint.generate = generate(true);
    store.set_frozen(model::kDoafn, false);
    StageOptions o = options;
    o.resume = options.resume;
    const auto r = run_adversarial(config, o, store, arch, joint, cc.lr, cc.disc_lr, set,
                                   options.out / "completion_joint.tvsn");
    result.summary["joint"] = r.summary;
  }

  bool untouched = true;
  const auto after = store.with_prefix(model::kPerceptual);
  for (std::size_t i = 0; i < after.size(); ++i) untouched = untouched && after[i]->value == frozen_before[i];
  if (!untouched) fail(ErrorKind::Consistency, "frozen perceptual parameters changed during completion training");
  result.summary["frozen_unchanged"] = untouched;
  return result;
}

StageResult train_baseline(const TrainConfig& config, const StageOptions& options) {
  config.validate();
  ensure_out(options.out);
  const auto arch = arch_for(config);
  const BaselineConfig& bc = config.baseline;
  const bool vgg = bc.loss == "vgg" || bc.loss == "vgg+adv";
  const bool adv = bc.loss == "adv" || bc.loss == "vgg+adv";
  LossWeights w = bc.weights;
  if (!vgg) w.beta = 0.0;
  if (!adv) w.alpha = 0.0;
  if (bc.loss == "l1") w.lambda = 0.0;

  fs::path perceptual_path;
  if (vgg) perceptual_path = prerequisite(options.perceptual_checkpoint, options.out, kPerceptualCheckpoint, "perceptual");
  const PairSet set(options.data, options.split);
  if (set.image_size() != arch.size) {
    fail(ErrorKind::Parameter, "dataset size " + std::to_string(set.image_size()) + " != config image_size " +
                                   std::to_string(arch.size));
  }

  ad::ParameterStore store;
  auto rng = init_rng(config, kBaselineSalt);
  model::init_baseline(store, arch, rng);
  model::init_discriminator(store, arch, rng);
  model::init_perceptual(store, arch, rng);
  if (vgg) load_perceptual(store, arch, perceptual_path);
  store.set_frozen(model::kPerceptual, true);
  store.set_frozen(model::kPerceptualHead, true);

  AdversarialSetup s;
  s.stage = "baseline";
  s.salt = kBaselineSalt;
  s.batch = bc.batch;
  s.generator_steps = bc.steps;
  s.ratio = bc.ratio;
  s.use_discriminator = adv;
  s.adversarial_term = adv;
  s.weights = w;
  s.literal_l1 = false;
  s.source_is_real = false;
  s.disc_noise = bc.disc_noise;
  s.checkpoint_every = bc.checkpoint_every;
  s.generator_prefixes = {model::kBaseline};
  s.saved_prefixes = {model::kBaseline, model::kDiscriminator, model::kPerceptual};
  s.generate = [&arch, &store](Graph& g, const PairBatch& b, bool track) {
    return model::baseline_forward(g, store, arch, g.constant(b.source), g.constant(b.encoding), track);
  };
  auto result = run_adversarial(config, options, store, arch, s, bc.lr, bc.disc_lr, set,
                                options.out / kBaselineCheckpoint);
  result.summary["loss_set"] = bc.loss;
  return result;
}

}  // namespace tvsn::train
