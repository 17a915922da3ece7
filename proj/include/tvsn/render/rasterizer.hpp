#pragma once

#include <Eigen/Core>
#include <memory>

#include "tvsn/core/grid.hpp"
#include "tvsn/render/camera.hpp"
#include "tvsn/render/mesh.hpp"

namespace tvsn::render {

struct RenderOptions {
  Eigen::Vector3f background{1.0f, 1.0f, 1.0f};
  // Fixed in the object frame, so Lambertian shading is view independent.
  // Zero z component keeps shading even under the z-mirror.
  Eigen::Vector3d light_direction{0.45, 0.85, 0.0};
  float ambient = 0.45f;
  float diffuse = 0.55f;
};

// Per-pixel render outputs for one view. Normals are the geometric face
// normals in the canonical object frame.
struct GBuffer {
  Image rgb;          // 3 x H x W
  Image objcoord;     // 3 x H x W, canonical object coordinates (0 on background)
  Image normal;       // 3 x H x W, unit on foreground (0 on background)
  Grid<float> depth;  // camera-space z, +inf on background
  Grid<float> fg;     // 1 on foreground, 0 elsewhere
  Grid<int> triangle; // covering triangle index, -1 on background
  CameraModel camera;
  std::shared_ptr<const Mesh> mesh;
  int degenerate_triangles = 0;
  int clipped_triangles = 0;

  int height() const { return depth.height(); }
  int width() const { return depth.width(); }
};

GBuffer rasterize(std::shared_ptr<const Mesh> mesh, const CameraModel& camera, const RenderOptions& options = {});
GBuffer rasterize(const Mesh& mesh, const CameraModel& camera, const RenderOptions& options = {});

}  // namespace tvsn::render
