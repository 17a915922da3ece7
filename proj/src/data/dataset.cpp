#include "tvsn/data/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "json.hpp"
#include "tvsn/core/error.hpp"
#include "tvsn/core/image_io.hpp"
#include "tvsn/core/tensor_file.hpp"
#include "tvsn/render/obj.hpp"
#include "tvsn/render/procedural.hpp"

namespace tvsn::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string padded(long v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*ld", width, v);
  return buf;
}

std::string view_dir(const std::string& mesh_name, double elevation, double azimuth) {
  return mesh_name + "/view_e" + padded(std::lround(elevation), 2) + "_a" + padded(std::lround(azimuth), 3);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

void validate_spec(const ViewSpec& spec) {
  if (spec.elevations.empty() || spec.azimuth_count < 1) fail(ErrorKind::Parameter, "view spec is empty");
  const double q = spec.azimuth_step / 20.0;
  if (!(spec.azimuth_step > 0.0) || std::abs(q - std::round(q)) > 1e-9) {
    fail(ErrorKind::Parameter, "azimuth step must be a positive multiple of 20 degrees");
  }
  if (spec.azimuth_step * spec.azimuth_count > 360.0 + 1e-9) {
    fail(ErrorKind::Parameter, "azimuths wrap past 360 degrees");
  }
}

// Run fn(i) for i in [0, n) on a small pool; results go to caller-owned slots.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  const int workers = std::max(1, std::min(n, threads));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

TensorEntry plane_entry(const std::string& name, const Grid<float>& g) {
  return {name, {static_cast<std::uint32_t>(g.height()), static_cast<std::uint32_t>(g.width())}, g.storage()};
}

Grid<float> plane_from(const TensorEntry& e) {
  if (e.dims.size() != 2 || e.data.size() != static_cast<std::size_t>(e.dims[0]) * e.dims[1]) {
    fail(ErrorKind::Format, "tensor entry '" + e.name + "' is not a 2-D plane");
  }
  Grid<float> g(static_cast<int>(e.dims[0]), static_cast<int>(e.dims[1]));
  g.storage() = e.data;
  return g;
}

json source_json(const MeshSource& s) {
  json j{{"origin", s.origin}};
  if (s.origin == "procedural") {
    j["kind"] = s.kind;
    j["seed"] = s.seed;
  } else {
    j["path"] = s.path;
  }
  return j;
}

MeshSource source_from_json(const json& j) {
  MeshSource s;
  s.origin = j.at("origin").get<std::string>();
  if (s.origin == "procedural") {
    s.kind = j.at("kind").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
  } else if (s.origin == "obj") {
    s.path = j.at("path").get<std::string>();
  } else {
    fail(ErrorKind::Format, "unknown mesh origin '" + s.origin + "'");
  }
  return s;
}

}  // namespace

MeshSource procedural_source(std::uint64_t seed, const std::string& kind) {
  const auto k = render::parse_object_kind(kind);
  return {"procedural", render::to_string(k), seed, "",
          std::make_shared<const render::Mesh>(render::make_procedural_object(seed, k))};
}

MeshSource obj_source(const fs::path& path) {
  return {"obj", "", 0, path.string(), std::make_shared<const render::Mesh>(render::load_obj(path))};
}

std::vector<int> DatasetManifest::pairs_in_split(const std::string& split) const {
  std::vector<bool> in(meshes.size(), false);
  for (const auto& m : meshes) in[static_cast<std::size_t>(m.id)] = (split == "all" || m.split == split);
  std::vector<int> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (in[static_cast<std::size_t>(view(pairs[i].src).mesh)]) out.push_back(static_cast<int>(i));
  }
  return out;
}

const ViewEntry& DatasetManifest::view(int id) const {
  if (id < 0 || id >= static_cast<int>(views.size())) {
    fail(ErrorKind::Lookup, "view id " + std::to_string(id) + " out of range");
  }
  return views[static_cast<std::size_t>(id)];
}

void write_gbuffer(const fs::path& path, const render::GBuffer& g) {
  TensorFile f;
  json meta{{"azimuth", g.camera.azimuth},
            {"elevation", g.camera.elevation},
            {"radius", g.camera.radius},
            {"size", g.camera.size},
            {"focal", g.camera.focal()},
            {"degenerate_triangles", g.degenerate_triangles},
            {"clipped_triangles", g.clipped_triangles}};
  f.meta = meta.dump();
  const auto h = static_cast<std::uint32_t>(g.height());
  const auto w = static_cast<std::uint32_t>(g.width());
  f.add("objcoord", {3, h, w}, {g.objcoord.data().begin(), g.objcoord.data().end()});
  f.add("normal", {3, h, w}, {g.normal.data().begin(), g.normal.data().end()});
  f.entries.push_back(plane_entry("depth", g.depth));
  f.entries.push_back(plane_entry("fg", g.fg));
  Grid<float> tri(g.height(), g.width());
  for (std::size_t i = 0; i < tri.size(); ++i) tri.storage()[i] = static_cast<float>(g.triangle.storage()[i]);
  f.entries.push_back(plane_entry("triangle", tri));
  write_tensor_file(path, f);
}

void write_flow(const fs::path& path, const gt::FlowField& flow) {
  TensorFile f;
  f.entries.push_back(plane_entry("fy", flow.fy));
  f.entries.push_back(plane_entry("fx", flow.fx));
  f.entries.push_back(plane_entry("valid", flow.valid));
  write_tensor_file(path, f);
}

gt::FlowField read_flow(const fs::path& path) {
  const TensorFile f = read_tensor_file(path);
  gt::FlowField flow{plane_from(f.at("fy")), plane_from(f.at("fx")), plane_from(f.at("valid"))};
  if (!flow.fy.same_size(flow.valid) || !flow.fx.same_size(flow.valid)) {
    fail(ErrorKind::Format, path.string() + ": flow planes differ in size");
  }
  return flow;
}

DatasetManifest generate_dataset(const std::vector<MeshSource>& meshes, const ViewSpec& spec, const fs::path& out_dir,
                                 const GenerateOptions& options) {
  if (meshes.empty()) fail(ErrorKind::Parameter, "generate_dataset needs at least one mesh");
  validate_spec(spec);
  for (const auto& m : meshes) {
    if (!m.mesh) fail(ErrorKind::Parameter, "mesh source without geometry");
  }
  ensure_dir(out_dir);

  DatasetManifest manifest;
  manifest.seed = options.seed;
  manifest.spec = spec;

  // Mesh-level split.
  std::vector<int> order(meshes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(meshes.size())));
  std::vector<std::string> split(meshes.size(), "train");
  for (std::size_t i = 0; i < n_test; ++i) split[static_cast<std::size_t>(order[i])] = "test";

  for (std::size_t m = 0; m < meshes.size(); ++m) {
    manifest.meshes.push_back({static_cast<int>(m), "mesh_" + padded(static_cast<long>(m), 3), meshes[m], split[m]});
  }
  for (const auto& me : manifest.meshes) {
    for (double el : spec.elevations) {
      for (int a = 0; a < spec.azimuth_count; ++a) {
        const double az = a * spec.azimuth_step;
        manifest.views.push_back({static_cast<int>(manifest.views.size()), me.id, az, el, view_dir(me.name, el, az)});
      }
    }
  }

  const int threads = options.threads > 0 ? options.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  std::vector<render::GBuffer> gbuffers(manifest.views.size());
  parallel_for(static_cast<int>(manifest.views.size()), threads, [&](int i) {
    const ViewEntry& v = manifest.views[static_cast<std::size_t>(i)];
    const auto cam = render::make_camera(v.azimuth, v.elevation, spec.radius, spec.size, spec.focal_scale);
    render::GBuffer g = render::rasterize(meshes[static_cast<std::size_t>(v.mesh)].mesh, cam, options.render);
    const fs::path dir = out_dir / v.dir;
    ensure_dir(dir);
    write_png(dir / kRgbFile, g.rgb);
    write_png_mask(dir / kFgFile, g.fg);
    write_gbuffer(dir / kGBufferFile, g);
    gbuffers[static_cast<std::size_t>(i)] = std::move(g);
  });

  for (const auto& src : manifest.views) {
    for (const auto& tgt : manifest.views) {
      if (src.mesh != tgt.mesh || src.elevation != tgt.elevation || src.id == tgt.id) continue;
      const long theta = ((std::lround(tgt.azimuth - src.azimuth) % 360) + 360) % 360;
      if (theta < 20 || theta > 340 || theta % 20 != 0) continue;
      const std::string dir = manifest.meshes[static_cast<std::size_t>(src.mesh)].name + "/pairs/v" +
                              padded(src.id, 5) + "_v" + padded(tgt.id, 5);
      manifest.pairs.push_back({src.id, tgt.id, static_cast<int>(theta), dir, 0.0, 0.0});
    }
  }

  parallel_for(static_cast<int>(manifest.pairs.size()), threads, [&](int i) {
    PairEntry& p = manifest.pairs[static_cast<std::size_t>(i)];
    const render::GBuffer& s = gbuffers[static_cast<std::size_t>(p.src)];
    const render::GBuffer& t = gbuffers[static_cast<std::size_t>(p.tgt)];
    const gt::FlowField flow = gt::gt_flow(s, t, p.theta, s.camera, options.visibility);
    const gt::VisibilityMap svis = gt::symmetry_visibility_map(s, t, p.theta, s.camera, options.visibility);
    const gt::Mask bg = gt::background_mask(gt::foreground(s), gt::foreground(t));
    const fs::path dir = out_dir / p.dir;
    ensure_dir(dir);
    write_flow(dir / kFlowFile, flow);
    write_png_mask(dir / kVisFile, flow.valid);
    write_png_mask(dir / kSvisFile, svis.m);
    write_png_mask(dir / kBgFile, bg.m);
    p.hole_fraction = gt::hole_fraction(bg, svis);
    double fg = 0.0;
    double vis = 0.0;
    for (std::size_t k = 0; k < t.fg.size(); ++k) {
      fg += t.fg.storage()[k];
      vis += flow.valid.storage()[k];
    }
    p.visible_fraction = fg > 0.0 ? vis / fg : 0.0;
  });

  write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  json j;
  j["version"] = manifest.version;
  j["seed"] = manifest.seed;
  j["view_spec"] = {{"elevations", manifest.spec.elevations},
                    {"azimuth_step", manifest.spec.azimuth_step},
                    {"azimuth_count", manifest.spec.azimuth_count},
                    {"size", manifest.spec.size},
                    {"radius", manifest.spec.radius},
                    {"focal_scale", manifest.spec.focal_scale}};
  json meshes = json::array();
  for (const auto& m : manifest.meshes) {
    meshes.push_back({{"id", m.id}, {"name", m.name}, {"source", source_json(m.source)}, {"split", m.split}});
  }
  j["meshes"] = meshes;
  json views = json::array();
  for (const auto& v : manifest.views) {
    views.push_back({{"id", v.id}, {"mesh", v.mesh}, {"azimuth", v.azimuth}, {"elevation", v.elevation}, {"dir", v.dir}});
  }
  j["views"] = views;
  json pairs = json::array();
  for (const auto& p : manifest.pairs) {
    pairs.push_back({{"src", p.src},
                     {"tgt", p.tgt},
                     {"theta", p.theta},
                     {"dir", p.dir},
                     {"hole_fraction", p.hole_fraction},
                     {"visible_fraction", p.visible_fraction}});
  }
  j["pairs"] = pairs;
  json split{{"train", json::array()}, {"test", json::array()}};
  for (const auto& m : manifest.meshes) split[m.split].push_back(m.id);
  j["split"] = split;

  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

DatasetManifest read_manifest(const fs::path& given) {
  const fs::path path = fs::is_directory(given) ? given / "manifest.json" : given;
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open manifest " + path.string());
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    m.version = j.at("version").get<int>();
    if (m.version != DatasetManifest::kVersion) {
      fail(ErrorKind::Format, "unsupported manifest version " + std::to_string(m.version));
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    const json& vs = j.at("view_spec");
    m.spec.elevations = vs.at("elevations").get<std::vector<double>>();
    m.spec.azimuth_step = vs.at("azimuth_step").get<double>();
    m.spec.azimuth_count = vs.at("azimuth_count").get<int>();
    m.spec.size = vs.at("size").get<int>();
    m.spec.radius = vs.at("radius").get<double>();
    m.spec.focal_scale = vs.at("focal_scale").get<double>();
    for (const auto& e : j.at("meshes")) {
      m.meshes.push_back({e.at("id").get<int>(), e.at("name").get<std::string>(), source_from_json(e.at("source")),
                          e.at("split").get<std::string>()});
    }
    for (const auto& e : j.at("views")) {
      m.views.push_back({e.at("id").get<int>(), e.at("mesh").get<int>(), e.at("azimuth").get<double>(),
                         e.at("elevation").get<double>(), e.at("dir").get<std::string>()});
    }
    for (const auto& e : j.at("pairs")) {
      m.pairs.push_back({e.at("src").get<int>(), e.at("tgt").get<int>(), e.at("theta").get<int>(),
                         e.at("dir").get<std::string>(), e.at("hole_fraction").get<double>(),
                         e.value("visible_fraction", 0.0)});
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }

  const fs::path root = path.parent_path();
  for (std::size_t i = 0; i < m.meshes.size(); ++i) {
    if (m.meshes[i].id != static_cast<int>(i)) fail(ErrorKind::Format, "mesh ids must be dense and ordered");
    if (m.meshes[i].split != "train" && m.meshes[i].split != "test") {
      fail(ErrorKind::Format, "mesh " + m.meshes[i].name + " has unknown split '" + m.meshes[i].split + "'");
    }
  }
  for (std::size_t i = 0; i < m.views.size(); ++i) {
    const auto& v = m.views[i];
    if (v.id != static_cast<int>(i) || v.mesh < 0 || v.mesh >= static_cast<int>(m.meshes.size())) {
      fail(ErrorKind::Format, "view table entry " + std::to_string(i) + " is inconsistent");
    }
    if (!fs::exists(root / v.dir / kRgbFile)) fail(ErrorKind::Io, "missing file " + (root / v.dir / kRgbFile).string());
  }
  for (const auto& p : m.pairs) {
    if (p.theta < 20 || p.theta > 340 || p.theta % 20 != 0) {
      fail(ErrorKind::Format, "pair theta " + std::to_string(p.theta) + " outside {20, ..., 340}");
    }
    const auto& s = m.view(p.src);
    const auto& t = m.view(p.tgt);
    if (s.mesh != t.mesh) fail(ErrorKind::Format, "pair " + p.dir + " crosses meshes");
    if (!fs::exists(root / p.dir / kSvisFile)) fail(ErrorKind::Io, "missing file " + (root / p.dir / kSvisFile).string());
  }
  return m;
}

PairSample load_pair(const fs::path& root, const DatasetManifest& manifest, int pair_index) {
  if (pair_index < 0 || pair_index >= static_cast<int>(manifest.pairs.size())) {
    fail(ErrorKind::Lookup, "pair index " + std::to_string(pair_index) + " out of range");
  }
  const PairEntry& p = manifest.pairs[static_cast<std::size_t>(pair_index)];
  const fs::path src = root / manifest.view(p.src).dir;
  const fs::path tgt = root / manifest.view(p.tgt).dir;
  const fs::path dir = root / p.dir;
  PairSample s;
  s.src_rgb = read_png(src / kRgbFile);
  s.tgt_rgb = read_png(tgt / kRgbFile);
  s.src_fg = read_png_mask(src / kFgFile);
  s.tgt_fg = read_png_mask(tgt / kFgFile);
  s.vis = read_png_mask(dir / kVisFile);
  s.svis = read_png_mask(dir / kSvisFile);
  s.bg = read_png_mask(dir / kBgFile);
  s.theta = p.theta;
  return s;
}

gt::FlowField load_flow(const fs::path& root, const PairEntry& pair) { return read_flow(root / pair.dir / kFlowFile); }

}  // namespace tvsn::data
