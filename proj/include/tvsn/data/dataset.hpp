#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tvsn/core/grid.hpp"
#include "tvsn/groundtruth/groundtruth.hpp"
#include "tvsn/render/mesh.hpp"
#include "tvsn/render/rasterizer.hpp"

namespace tvsn::data {

struct ViewSpec {
  std::vector<double> elevations{0.0, 15.0, 30.0};
  double azimuth_step = 20.0;  // multiple of 20
  int azimuth_count = 18;      // azimuths 0, step, ..., (count-1)*step
  int size = 64;
  double radius = render::kDefaultRadius;
  double focal_scale = render::kDefaultFocalScale;
};

struct MeshSource {
  std::string origin;  // "procedural" or "obj"
  std::string kind;    // procedural kind name, empty for obj
  std::uint64_t seed = 0;
  std::string path;    // obj path, empty for procedural
  std::shared_ptr<const render::Mesh> mesh;
};

MeshSource procedural_source(std::uint64_t seed, const std::string& kind);
MeshSource obj_source(const std::filesystem::path& path);

struct ViewEntry {
  int id = 0;
  int mesh = 0;
  double azimuth = 0.0;
  double elevation = 0.0;
  std::string dir;  // relative to the dataset root
};

struct PairEntry {
  int src = 0;
  int tgt = 0;
  int theta = 0;  // degrees in {20, ..., 340}
  std::string dir;
  double hole_fraction = 0.0;
  double visible_fraction = 0.0;  // share of target foreground with M_vis = 1
};

struct MeshEntry {
  int id = 0;
  std::string name;
  MeshSource source;
  std::string split;  // "train" or "test"
};

struct DatasetManifest {
  static constexpr int kVersion = 1;

  int version = kVersion;
  std::uint64_t seed = 0;
  ViewSpec spec;
  std::vector<MeshEntry> meshes;
  std::vector<ViewEntry> views;
  std::vector<PairEntry> pairs;

  std::vector<int> pairs_in_split(const std::string& split) const;
  const ViewEntry& view(int id) const;
};

struct GenerateOptions {
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  render::RenderOptions render;
  gt::VisibilityOptions visibility;
};

// Renders every mesh x view, computes ground truth for every ordered view pair
// at equal elevation and writes the manifest. Mesh ids are split 80/20 into
// train/test by a seeded shuffle.
DatasetManifest generate_dataset(const std::vector<MeshSource>& meshes, const ViewSpec& spec,
                                 const std::filesystem::path& out_dir, const GenerateOptions& options = {});

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
// Parses and validates: referenced files must exist, thetas must be legal.
// `path` may also be the dataset directory.
DatasetManifest read_manifest(const std::filesystem::path& path);

// File names inside view and pair directories.
inline constexpr const char* kRgbFile = "rgb.png";
inline constexpr const char* kFgFile = "fg.png";
inline constexpr const char* kGBufferFile = "gbuffer.tvsn";
inline constexpr const char* kFlowFile = "flow.tvsn";
inline constexpr const char* kVisFile = "vis.png";
inline constexpr const char* kSvisFile = "svis.png";
inline constexpr const char* kBgFile = "bg.png";

struct PairSample {
  Image src_rgb;
  Image tgt_rgb;
  Grid<float> src_fg;
  Grid<float> tgt_fg;
  Grid<float> vis;
  Grid<float> svis;
  Grid<float> bg;
  double theta = 0.0;
};

PairSample load_pair(const std::filesystem::path& root, const DatasetManifest& manifest, int pair_index);
gt::FlowField load_flow(const std::filesystem::path& root, const PairEntry& pair);

void write_flow(const std::filesystem::path& path, const gt::FlowField& flow);
gt::FlowField read_flow(const std::filesystem::path& path);
void write_gbuffer(const std::filesystem::path& path, const render::GBuffer& g);

}  // namespace tvsn::data
