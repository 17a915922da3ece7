#pragma once

// Brute-force reference geometry: cameras as 4x4 homogeneous matrices built
// from look-at vectors, and ray casting against every triangle.

#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "tvsn/render/mesh.hpp"

namespace oracle {

using V3 = std::array<double, 3>;
using M4 = std::array<std::array<double, 4>, 4>;

inline V3 sub(const V3& a, const V3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline V3 add(const V3& a, const V3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline V3 scale(const V3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline double dot(const V3& a, const V3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline V3 cross(const V3& a, const V3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const V3& a) { return std::sqrt(dot(a, a)); }
inline V3 unit(const V3& a) { return scale(a, 1.0 / norm(a)); }

struct Camera {
  V3 eye;
  M4 view;  // world -> camera, rows: right, down, forward
  double f;
  double c;
  int size;
};

inline Camera make_camera(double az_deg, double el_deg, double radius, int size, double focal_scale = 0.75) {
  const double pi = std::acos(-1.0);
  const double az = az_deg * pi / 180.0;
  const double el = el_deg * pi / 180.0;
  Camera cam;
  cam.eye = {radius * std::cos(el) * std::sin(az), radius * std::sin(el), radius * std::cos(el) * std::cos(az)};
  const V3 fwd = unit(scale(cam.eye, -1.0));
  const V3 right = unit(cross(fwd, {0.0, 1.0, 0.0}));
  const V3 down = cross(fwd, right);
  const std::array<V3, 3> rows{right, down, fwd};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) cam.view[i][j] = rows[i][j];
    cam.view[i][3] = -dot(rows[i], cam.eye);
  }
  cam.view[3] = {0.0, 0.0, 0.0, 1.0};
  cam.f = focal_scale * size;
  cam.c = (size - 1) / 2.0;
  cam.size = size;
  return cam;
}

// Homogeneous transform of a point: returns camera-space coordinates.
inline V3 to_camera(const Camera& cam, const V3& x) {
  const double hx[4] = {x[0], x[1], x[2], 1.0};
  V3 out{};
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) acc += cam.view[i][j] * hx[j];
    out[i] = acc;
  }
  return out;
}

struct Pixel {
  double h;
  double w;
  double depth;
};

inline std::optional<Pixel> project(const Camera& cam, const V3& x) {
  const V3 p = to_camera(cam, x);
  if (p[2] <= 0.0) return std::nullopt;
  return Pixel{cam.f * p[1] / p[2] + cam.c, cam.f * p[0] / p[2] + cam.c, p[2]};
}

// World-space unit ray through pixel centre (h, w).
inline V3 pixel_ray(const Camera& cam, double h, double w) {
  const V3 d_cam{(w - cam.c) / cam.f, (h - cam.c) / cam.f, 1.0};
  // Inverse rotation is the transpose of the 3x3 block.
  V3 d{};
  for (int j = 0; j < 3; ++j) d[j] = cam.view[0][j] * d_cam[0] + cam.view[1][j] * d_cam[1] + cam.view[2][j] * d_cam[2];
  return unit(d);
}

inline V3 vertex(const tvsn::render::Mesh& m, int i) {
  const auto& v = m.vertices[static_cast<std::size_t>(i)];
  return {v.x(), v.y(), v.z()};
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int triangle = -1;
  V3 point{};
  V3 normal{};
};

// Plane intersection followed by an inside test with barycentric areas.
inline Hit cast(const tvsn::render::Mesh& m, const V3& origin, const V3& dir) {
  Hit best;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const V3 a = vertex(m, m.triangles[t][0]);
    const V3 b = vertex(m, m.triangles[t][1]);
    const V3 c = vertex(m, m.triangles[t][2]);
    const V3 n = cross(sub(b, a), sub(c, a));
    const double denom = dot(n, dir);
    if (std::abs(denom) < 1e-14) continue;
    const double s = dot(n, sub(a, origin)) / denom;
    if (s <= 1e-9 || s >= best.t) continue;
    const V3 p = add(origin, scale(dir, s));
    const double nn = dot(n, n);
    const double wa = dot(cross(sub(b, p), sub(c, p)), n) / nn;
    const double wb = dot(cross(sub(c, p), sub(a, p)), n) / nn;
    const double wc = 1.0 - wa - wb;
    const double eps = 1e-9;
    if (wa < -eps || wb < -eps || wc < -eps) continue;
    best.t = s;
    best.triangle = static_cast<int>(t);
    best.point = p;
    best.normal = unit(n);
  }
  return best;
}

// Reference visibility of a surface point from a camera eye: the first hit
// along the eye->point ray must be the point itself.
inline bool visible_from(const tvsn::render::Mesh& m, const Camera& cam, const V3& x, const V3& normal, double tol) {
  const V3 to_eye = sub(cam.eye, x);
  if (dot(to_eye, normal) <= 0.0) return false;
  const auto px = project(cam, x);
  if (!px) return false;
  const long hi = std::lround(px->h);
  const long wi = std::lround(px->w);
  if (hi < 0 || hi >= cam.size || wi < 0 || wi >= cam.size) return false;
  const double dist = norm(to_eye);
  const Hit h = cast(m, cam.eye, scale(to_eye, -1.0 / dist));
  return dist <= h.t + tol;
}

}  // namespace oracle
