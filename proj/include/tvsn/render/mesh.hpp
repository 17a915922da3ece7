#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

namespace tvsn::render {

enum class TextureKind {
  Flat,     // albedo only
  Checker,  // UV checkerboard modulating the albedo (falls back to object coords without UVs)
  Waves,    // smooth solid texture on object coordinates, even in z
};

struct Mesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Eigen::Vector3d> normals;  // per vertex
  std::vector<Eigen::Vector3f> albedo;   // per triangle
  std::vector<TextureKind> texture;      // per triangle
  std::vector<Eigen::Vector2f> uv;       // per vertex, optional (empty = none)

  std::size_t triangle_count() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }
};

struct Bounds {
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;
};

Bounds bounding_box(const Mesh& mesh);
double bounding_radius(const Mesh& mesh);

// Unnormalized face normal (cross product of the two edges from vertex 0);
// its length is twice the triangle area.
Eigen::Vector3d face_cross(const Mesh& mesh, std::size_t tri);

// Area-weighted average of incident face normals.
void compute_vertex_normals(Mesh& mesh);

// Throws Format errors for out-of-range indices, attribute count mismatches,
// non-unit normals and vertices outside [-1,1]^3.
void validate_mesh(const Mesh& mesh);

// Every positional edge shared by exactly two triangles.
bool is_watertight(const Mesh& mesh);

// Per-pixel albedo after applying the triangle's procedural texture.
Eigen::Vector3f surface_albedo(const Mesh& mesh, std::size_t tri, const Eigen::Vector3d& objcoord,
                               const Eigen::Vector2f& uv);

}  // namespace tvsn::render
