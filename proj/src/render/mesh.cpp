#include "tvsn/render/mesh.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "tvsn/core/error.hpp"

namespace tvsn::render {

Bounds bounding_box(const Mesh& mesh) {
  Bounds b{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  if (mesh.vertices.empty()) return b;
  b.lo = b.hi = mesh.vertices.front();
  for (const auto& v : mesh.vertices) {
    b.lo = b.lo.cwiseMin(v);
    b.hi = b.hi.cwiseMax(v);
  }
  return b;
}

double bounding_radius(const Mesh& mesh) {
  double r = 0.0;
  for (const auto& v : mesh.vertices) r = std::max(r, v.norm());
  return r;
}

Eigen::Vector3d face_cross(const Mesh& mesh, std::size_t tri) {
  const auto& t = mesh.triangles[tri];
  const Eigen::Vector3d& a = mesh.vertices[t[0]];
  return (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a);
}

void compute_vertex_normals(Mesh& mesh) {
  mesh.normals.assign(mesh.vertices.size(), Eigen::Vector3d::Zero());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Eigen::Vector3d n = face_cross(mesh, i);  // length = 2 * area
    for (int k : mesh.triangles[i]) mesh.normals[k] += n;
  }
  for (auto& n : mesh.normals) {
    const double len = n.norm();
    n = len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d(0.0, 1.0, 0.0);
  }
}

void validate_mesh(const Mesh& mesh) {
  const auto nv = static_cast<int>(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    for (int idx : mesh.triangles[i]) {
      if (idx < 0 || idx >= nv) {
        fail(ErrorKind::Format, "triangle " + std::to_string(i) + " references vertex " + std::to_string(idx) +
                                    " but the mesh has " + std::to_string(nv) + " vertices");
      }
    }
  }
  if (mesh.normals.size() != mesh.vertices.size()) fail(ErrorKind::Format, "normal count != vertex count");
  if (mesh.albedo.size() != mesh.triangles.size()) fail(ErrorKind::Format, "albedo count != triangle count");
  if (mesh.texture.size() != mesh.triangles.size()) fail(ErrorKind::Format, "texture count != triangle count");
  if (!mesh.uv.empty() && mesh.uv.size() != mesh.vertices.size()) fail(ErrorKind::Format, "uv count != vertex count");
  for (const auto& n : mesh.normals) {
    if (std::abs(n.norm() - 1.0) > 1e-6) fail(ErrorKind::Format, "vertex normal is not unit length");
  }
  for (const auto& v : mesh.vertices) {
    if (!v.allFinite() || v.cwiseAbs().maxCoeff() > 1.0) {
      fail(ErrorKind::Format, "vertex outside the canonical [-1,1]^3 box");
    }
  }
}

bool is_watertight(const Mesh& mesh) {
  // Positions are quantized so duplicated (per-face) vertices weld.
  using Key = std::tuple<long long, long long, long long>;
  auto key = [](const Eigen::Vector3d& v) {
    return Key{std::llround(v.x() * 1e7), std::llround(v.y() * 1e7), std::llround(v.z() * 1e7)};
  };
  std::map<std::pair<Key, Key>, int> edges;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      Key a = key(mesh.vertices[t[e]]);
      Key b = key(mesh.vertices[t[(e + 1) % 3]]);
      if (b < a) std::swap(a, b);
      ++edges[{a, b}];
    }
  }
  return std::all_of(edges.begin(), edges.end(), [](const auto& kv) { return kv.second == 2; });
}

Eigen::Vector3f surface_albedo(const Mesh& mesh, std::size_t tri, const Eigen::Vector3d& p,
                               const Eigen::Vector2f& uv) {
  const Eigen::Vector3f base = mesh.albedo[tri];
  switch (mesh.texture[tri]) {
    case TextureKind::Flat:
      return base;
    case TextureKind::Checker: {
      const double u = mesh.uv.empty() ? p.x() + p.y() : uv.x();
      const double v = mesh.uv.empty() ? std::abs(p.z()) + p.y() : uv.y();
      const long long cell = static_cast<long long>(std::floor(u * 4.0)) + static_cast<long long>(std::floor(v * 4.0));
      return (cell & 1) != 0 ? base : Eigen::Vector3f(base * 0.55f);
    }
    case TextureKind::Waves: {
      const double s = std::sin(5.0 * p.x() + 1.0) * std::cos(4.0 * p.y()) * std::cos(3.5 * p.z());
      const float m = static_cast<float>(0.7 + 0.3 * s);
      return Eigen::Vector3f(base.x() * m, base.y() * (1.3f - 0.6f * m) + 0.1f * m, base.z() * m);
    }
  }
  return base;
}

}  // namespace tvsn::render
