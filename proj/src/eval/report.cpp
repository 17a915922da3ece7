#include "tvsn/eval/report.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>

#include "tvsn/core/error.hpp"
#include "tvsn/eval/metrics.hpp"
#include "tvsn/train/pipeline.hpp"

namespace tvsn::eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  if (xs.empty()) return a;
  for (double x : xs) a.mean += x;
  a.mean /= static_cast<double>(xs.size());
  for (double x : xs) a.std += (x - a.mean) * (x - a.mean);
  a.std = std::sqrt(a.std / static_cast<double>(xs.size()));
  return a;
}

}  // namespace

json EvalReport::to_json() const {
  json rows = json::array();
  for (const auto& p : pairs) {
    rows.push_back({{"pair", p.pair}, {"src", p.src}, {"tgt", p.tgt}, {"theta", p.theta}, {"l1", p.l1}, {"ssim", p.ssim}});
  }
  return {{"predictor", predictor},
          {"split", split},
          {"count", pairs.size()},
          {"l1", {{"mean", l1.mean}, {"std", l1.std}}},
          {"ssim", {{"mean", ssim.mean}, {"std", ssim.std}}},
          {"config", config},
          {"runtime_s", runtime_s},
          {"pairs", rows}};
}

void EvalReport::write_json(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write report " + path.string());
  out << to_json().dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void EvalReport::write_csv(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write table " + path.string());
  out.precision(9);
  out << "pair,src,tgt,theta,l1,ssim\n";
  for (const auto& p : pairs) {
    out << p.pair << ',' << p.src << ',' << p.tgt << ',' << p.theta << ',' << p.l1 << ',' << p.ssim << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

Predictor model_predictor(const fs::path& checkpoint) {
  auto synth = std::make_shared<train::Synthesizer>(checkpoint);
  return [synth](const std::vector<const data::PairSample*>& pairs) {
    std::vector<const Image*> src;
    std::vector<double> thetas;
    std::vector<const Grid<float>*> bgs;
    for (const auto* p : pairs) {
      src.push_back(&p->src_rgb);
      thetas.push_back(p->theta);
      bgs.push_back(&p->bg);
    }
    std::vector<Image> out;
    for (auto& s : synth->run(src, thetas, bgs)) out.push_back(std::move(s.output));
    return out;
  };
}

Predictor target_predictor() {
  return [](const std::vector<const data::PairSample*>& pairs) {
    std::vector<Image> out;
    for (const auto* p : pairs) out.push_back(p->tgt_rgb);
    return out;
  };
}

Predictor constant_predictor(float value) {
  return [value](const std::vector<const data::PairSample*>& pairs) {
    std::vector<Image> out;
    for (const auto* p : pairs) {
      const Image& t = p->tgt_rgb;
      out.emplace_back(t.channels(), t.height(), t.width(), value);
    }
    return out;
  };
}

EvalReport evaluate(const fs::path& data_root, const std::string& split, const Predictor& predict,
                    const std::string& predictor_name, int batch, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto manifest = data::read_manifest(data_root);
  const auto ids = manifest.pairs_in_split(split);
  if (ids.empty()) fail(ErrorKind::Parameter, "split '" + split + "' has no pairs in " + data_root.string());
  if (batch < 1) fail(ErrorKind::Parameter, "eval batch must be >= 1");

  EvalReport r;
  r.predictor = predictor_name;
  r.split = split;
  r.config = {{"data", data_root.string()}, {"batch", batch}, {"ssim", {{"window", 11}, {"sigma", 1.5}, {"k1", 0.01}, {"k2", 0.03}}}};
  r.pairs.resize(ids.size());

  for (std::size_t first = 0; first < ids.size(); first += static_cast<std::size_t>(batch)) {
    const std::size_t last = std::min(ids.size(), first + static_cast<std::size_t>(batch));
    std::vector<data::PairSample> samples;
    for (std::size_t i = first; i < last; ++i) samples.push_back(data::load_pair(data_root, manifest, ids[i]));
    std::vector<const data::PairSample*> ptrs;
    for (const auto& s : samples) ptrs.push_back(&s);
    const auto preds = predict(ptrs);
    if (preds.size() != samples.size()) fail(ErrorKind::Consistency, "predictor returned the wrong number of images");

    // Metrics per pair are independent; each worker writes its own rows.
    const int n = static_cast<int>(samples.size());
    const int workers = std::max(1, std::min(threads, n));
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < n; i += workers) {
            const auto& s = samples[static_cast<std::size_t>(i)];
            const auto& pair = manifest.pairs[static_cast<std::size_t>(ids[first + static_cast<std::size_t>(i)])];
            auto& row = r.pairs[first + static_cast<std::size_t>(i)];
            row.pair = ids[first + static_cast<std::size_t>(i)];
            row.src = pair.src;
            row.tgt = pair.tgt;
            row.theta = pair.theta;
            row.l1 = l1_error(preds[static_cast<std::size_t>(i)], s.tgt_rgb);
            row.ssim = ssim(preds[static_cast<std::size_t>(i)], s.tgt_rgb);
          }
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  std::vector<double> l1s, ssims;
  for (const auto& p : r.pairs) {
    l1s.push_back(p.l1);
    ssims.push_back(p.ssim);
  }
  r.l1 = aggregate(l1s);
  r.ssim = aggregate(ssims);
  r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace tvsn::eval
