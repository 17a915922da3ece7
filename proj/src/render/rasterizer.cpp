#include "tvsn/render/rasterizer.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>

namespace tvsn::render {

namespace {

constexpr double kNearPlane = 1e-3;

struct ScreenVertex {
  double x;  // w axis
  double y;  // h axis
  double z;  // camera depth
};

double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// Top-left fill rule for the positive orientation used below (y down): an
// edge owns the pixels lying exactly on it when it is a top edge (horizontal,
// heading +x) or a left edge (heading -y).
bool owns_boundary(const ScreenVertex& a, const ScreenVertex& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

}  // namespace

GBuffer rasterize(const Mesh& mesh, const CameraModel& camera, const RenderOptions& options) {
  return rasterize(std::make_shared<const Mesh>(mesh), camera, options);
}

GBuffer rasterize(std::shared_ptr<const Mesh> mesh_ptr, const CameraModel& camera, const RenderOptions& options) {
  const Mesh& mesh = *mesh_ptr;
  const int n = camera.size;
  GBuffer g;
  g.rgb = Image(3, n, n);
  g.objcoord = Image(3, n, n);
  g.normal = Image(3, n, n);
  g.depth = Grid<float>(n, n, std::numeric_limits<float>::infinity());
  g.fg = Grid<float>(n, n, 0.0f);
  g.triangle = Grid<int>(n, n, -1);
  g.camera = camera;
  g.mesh = mesh_ptr;

  // Depth test runs in double; the float buffer is written at the end.
  Grid<double> zbuf(n, n, std::numeric_limits<double>::infinity());
  Grid<Eigen::Vector3d> coords(n, n, Eigen::Vector3d::Zero());
  Grid<Eigen::Vector2f> uvs(n, n, Eigen::Vector2f::Zero());

  const double f = camera.focal();
  const double c = camera.principal();
  const bool has_uv = !mesh.uv.empty();

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    std::array<int, 3> idx = mesh.triangles[t];
    std::array<ScreenVertex, 3> sv{};
    bool clipped = false;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d pc = camera.to_camera(mesh.vertices[idx[k]]);
      if (pc.z() <= kNearPlane) clipped = true;
      sv[k] = {f * pc.x() / pc.z() + c, f * pc.y() / pc.z() + c, pc.z()};
    }
    if (clipped) {
      ++g.clipped_triangles;
      continue;
    }
    double area = edge(sv[0], sv[1], sv[2].x, sv[2].y);
    if (!(std::abs(area) > 1e-12)) {
      ++g.degenerate_triangles;
      continue;
    }
    if (area < 0.0) {
      std::swap(sv[1], sv[2]);
      std::swap(idx[1], idx[2]);
      area = -area;
    }
    const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({sv[0].x, sv[1].x, sv[2].x}))));
    const int x1 = std::min(n - 1, static_cast<int>(std::floor(std::max({sv[0].x, sv[1].x, sv[2].x}))));
    const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({sv[0].y, sv[1].y, sv[2].y}))));
    const int y1 = std::min(n - 1, static_cast<int>(std::floor(std::max({sv[0].y, sv[1].y, sv[2].y}))));
    const bool own0 = owns_boundary(sv[1], sv[2]);
    const bool own1 = owns_boundary(sv[2], sv[0]);
    const bool own2 = owns_boundary(sv[0], sv[1]);

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double e0 = edge(sv[1], sv[2], x, y);
        const double e1 = edge(sv[2], sv[0], x, y);
        const double e2 = edge(sv[0], sv[1], x, y);
        if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) continue;
        if ((e0 == 0.0 && !own0) || (e1 == 0.0 && !own1) || (e2 == 0.0 && !own2)) continue;
        // Perspective-correct weights.
        const double w0 = e0 / area / sv[0].z;
        const double w1 = e1 / area / sv[1].z;
        const double w2 = e2 / area / sv[2].z;
        const double inv_z = w0 + w1 + w2;
        const double z = 1.0 / inv_z;
        if (!(z < zbuf(y, x))) continue;
        zbuf(y, x) = z;
        const double l0 = w0 * z;
        const double l1 = w1 * z;
        const double l2 = w2 * z;
        coords(y, x) = l0 * mesh.vertices[idx[0]] + l1 * mesh.vertices[idx[1]] + l2 * mesh.vertices[idx[2]];
        if (has_uv) {
          uvs(y, x) = static_cast<float>(l0) * mesh.uv[idx[0]] + static_cast<float>(l1) * mesh.uv[idx[1]] +
                      static_cast<float>(l2) * mesh.uv[idx[2]];
        }
        g.triangle(y, x) = static_cast<int>(t);
      }
    }
  }

  const Eigen::Vector3d light = options.light_direction.normalized();
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const int t = g.triangle(y, x);
      if (t < 0) {
        for (int k = 0; k < 3; ++k) g.rgb(k, y, x) = options.background[k];
        continue;
      }
      const Eigen::Vector3d nrm = face_cross(mesh, static_cast<std::size_t>(t)).normalized();
      const Eigen::Vector3d& p = coords(y, x);
      const float shade = options.ambient + options.diffuse * static_cast<float>(std::max(0.0, nrm.dot(light)));
      const Eigen::Vector3f albedo = surface_albedo(mesh, static_cast<std::size_t>(t), p, uvs(y, x));
      g.depth(y, x) = static_cast<float>(zbuf(y, x));
      g.fg(y, x) = 1.0f;
      for (int k = 0; k < 3; ++k) {
        g.rgb(k, y, x) = std::clamp(albedo[k] * shade, 0.0f, 1.0f);
        g.objcoord(k, y, x) = static_cast<float>(p[k]);
        g.normal(k, y, x) = static_cast<float>(nrm[k]);
      }
    }
  }
  return g;
}

}  // namespace tvsn::render
