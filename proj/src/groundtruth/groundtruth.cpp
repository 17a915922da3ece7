#include "tvsn/groundtruth/groundtruth.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tvsn/autodiff/kernels.hpp"
#include "tvsn/core/error.hpp"

namespace tvsn::gt {

namespace {

using render::CameraModel;
using render::GBuffer;

constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();

std::string dims(int h, int w) { return std::to_string(h) + "x" + std::to_string(w); }

template <typename A, typename B>
void require_same_size(const char* op, const A& a, const B& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    fail(ErrorKind::Parameter, std::string(op) + ": size mismatch " + dims(a.height(), a.width()) + " vs " +
                                   dims(b.height(), b.width()));
  }
}

void check_pair(const GBuffer& src, const GBuffer& tgt, double theta, const CameraModel& cam) {
  require_same_size("ground truth", src.depth, tgt.depth);
  if (cam.size != src.width() || src.height() != src.width()) {
    fail(ErrorKind::Parameter, "camera size " + std::to_string(cam.size) + " does not match image " +
                                   dims(src.height(), src.width()));
  }
  if (!std::isfinite(theta)) fail(ErrorKind::Parameter, "theta must be finite");
  if (tgt.camera.size != 0) {
    double d = std::fmod(tgt.camera.azimuth - cam.azimuth - theta, 360.0);
    if (d < -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    if (std::abs(d) > 1e-6) {
      fail(ErrorKind::Parameter, "target azimuth " + std::to_string(tgt.camera.azimuth) +
                                     " is not source azimuth plus theta " + std::to_string(cam.azimuth + theta));
    }
  }
}

// Distance along the unit ray to triangle `t`, or +inf.
double ray_hit(const render::Mesh& mesh, int t, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
  const Eigen::Vector3d& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
  const Eigen::Vector3d e1 = mesh.vertices[static_cast<std::size_t>(tri[1])] - a;
  const Eigen::Vector3d e2 = mesh.vertices[static_cast<std::size_t>(tri[2])] - a;
  const Eigen::Vector3d p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return std::numeric_limits<double>::infinity();
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = origin - a;
  const double u = s.dot(p) * inv;
  constexpr double kSlack = 1e-9;
  if (u < -kSlack || u > 1.0 + kSlack) return std::numeric_limits<double>::infinity();
  const Eigen::Vector3d q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < -kSlack || u + v > 1.0 + kSlack) return std::numeric_limits<double>::infinity();
  const double t_hit = e2.dot(q) * inv;
  return t_hit > 0.0 ? t_hit : std::numeric_limits<double>::infinity();
}

// Whether the object point x with normal n is seen by the source view.
bool seen_from_source(const GBuffer& src, const CameraModel& cam, const Eigen::Vector3d& x, const Eigen::Vector3d& n,
                      double tolerance) {
  const Eigen::Vector3d to_camera = cam.center - x;
  if (to_camera.dot(n) <= 0.0) return false;
  const Projection p = project(x, cam, 0.0);
  if (!p.valid) return false;
  const int size = src.width();
  const int hi = static_cast<int>(std::lround(p.h));
  const int wi = static_cast<int>(std::lround(p.w));
  if (hi < 0 || hi >= size || wi < 0 || wi >= size) return false;

  const double dist = to_camera.norm();
  if (src.mesh) {
    const Eigen::Vector3d dir = -to_camera / dist;
    double first = std::numeric_limits<double>::infinity();
    int tested[9];
    int count = 0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int y = hi + dy;
        const int xx = wi + dx;
        if (y < 0 || y >= size || xx < 0 || xx >= size) continue;
        const int t = src.triangle(y, xx);
        if (t < 0 || std::find(tested, tested + count, t) != tested + count) continue;
        tested[count++] = t;
        first = std::min(first, ray_hit(*src.mesh, t, cam.center, dir));
      }
    }
    if (first < dist - tolerance) return false;
    // Thin occluders can fall between pixel centres, so visibility is only
    // confirmed against the whole mesh.
    for (int t = 0; t < static_cast<int>(src.mesh->triangles.size()); ++t) {
      if (ray_hit(*src.mesh, t, cam.center, dir) < dist - tolerance) return false;
    }
    return true;
  }
  return p.depth <= static_cast<double>(src.depth(hi, wi)) + tolerance;
}

template <typename PointFn>
VisibilityMap visibility_impl(const GBuffer& src, const GBuffer& tgt, const CameraModel& cam,
                              const VisibilityOptions& options, PointFn&& transform) {
  const double tol = options.depth_tolerance * cam.radius;
  VisibilityMap out{Grid<float>(tgt.height(), tgt.width(), 0.0f)};
  for (int y = 0; y < tgt.height(); ++y) {
    for (int x = 0; x < tgt.width(); ++x) {
      if (tgt.fg(y, x) <= 0.5f) continue;
      Eigen::Vector3d p(tgt.objcoord(0, y, x), tgt.objcoord(1, y, x), tgt.objcoord(2, y, x));
      Eigen::Vector3d n(tgt.normal(0, y, x), tgt.normal(1, y, x), tgt.normal(2, y, x));
      transform(p, n);
      out.m(y, x) = seen_from_source(src, cam, p, n, tol) ? 1.0f : 0.0f;
    }
  }
  return out;
}

void mirror_z(Eigen::Vector3d& p, Eigen::Vector3d& n) {
  p.z() = -p.z();
  n.z() = -n.z();
}

}  // namespace

Projection project(const Eigen::Vector3d& x, const CameraModel& cam, double theta) {
  if (!x.allFinite()) fail(ErrorKind::Parameter, "project: non-finite point");
  const Eigen::Vector3d c = cam.to_camera(render::rotation_y(-theta) * x);
  Projection p;
  p.depth = c.z();
  if (!(c.z() > 0.0)) return p;
  const Eigen::Vector3d h = cam.intrinsics * c;
  p.h = h.y() / h.z();
  p.w = h.x() / h.z();
  p.valid = true;
  return p;
}

VisibilityMap visibility_map(const GBuffer& src, const GBuffer& tgt, double theta, const CameraModel& cam,
                             const VisibilityOptions& options) {
  check_pair(src, tgt, theta, cam);
  return visibility_impl(src, tgt, cam, options, [](Eigen::Vector3d&, Eigen::Vector3d&) {});
}

VisibilityMap mirrored_visibility_map(const GBuffer& src, const GBuffer& tgt, double theta, const CameraModel& cam,
                                      const VisibilityOptions& options) {
  check_pair(src, tgt, theta, cam);
  return visibility_impl(src, tgt, cam, options, mirror_z);
}

VisibilityMap symmetry_visibility_map(const GBuffer& src, const GBuffer& tgt, double theta, const CameraModel& cam,
                                      const VisibilityOptions& options) {
  VisibilityMap vis = visibility_map(src, tgt, theta, cam, options);
  const VisibilityMap sym = mirrored_visibility_map(src, tgt, theta, cam, options);
  for (std::size_t i = 0; i < vis.m.size(); ++i) vis.m.storage()[i] = std::max(vis.m.storage()[i], sym.m.storage()[i]);
  return vis;
}

Mask background_mask(const Mask& fg_s, const Mask& fg_t) {
  require_same_size("background_mask", fg_s.m, fg_t.m);
  Mask out{Grid<float>(fg_s.m.height(), fg_s.m.width(), 0.0f)};
  for (std::size_t i = 0; i < out.m.size(); ++i) {
    out.m.storage()[i] = (1.0f - fg_s.m.storage()[i]) * (1.0f - fg_t.m.storage()[i]);
  }
  return out;
}

FlowField gt_flow(const GBuffer& src, const GBuffer& tgt, double theta, const CameraModel& cam,
                  const VisibilityOptions& options) {
  const VisibilityMap vis = visibility_map(src, tgt, theta, cam, options);
  const int h = tgt.height();
  const int w = tgt.width();
  FlowField f{Grid<float>(h, w, kNaN), Grid<float>(h, w, kNaN), vis.m};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (vis.m(y, x) <= 0.5f) continue;
      const Eigen::Vector3d p(tgt.objcoord(0, y, x), tgt.objcoord(1, y, x), tgt.objcoord(2, y, x));
      const Projection pr = project(p, cam, 0.0);
      f.fy(y, x) = static_cast<float>(pr.h);
      f.fx(y, x) = static_cast<float>(pr.w);
    }
  }
  return f;
}

Image warp(const Image& source, const FlowField& flow) {
  const int ho = flow.height();
  const int wo = flow.width();
  std::vector<float> packed(static_cast<std::size_t>(2) * ho * wo);
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (std::size_t i = 0; i < plane; ++i) {
    const bool ok = flow.valid.storage()[i] > 0.5f;
    packed[i] = ok ? flow.fy.storage()[i] : kNaN;
    packed[plane + i] = ok ? flow.fx.storage()[i] : kNaN;
  }
  Image out(source.channels(), ho, wo);
  const ad::kernels::SampleGeom g{1, source.channels(), source.height(), source.width(), ho, wo};
  ad::kernels::bilinear_forward(source.data().data(), packed.data(), g, out.data().data());
  return out;
}

Image mat_visibility(const Image& image, const VisibilityMap& m) {
  require_same_size("mat_visibility", image, m.m);
  Image out = image;
  for (int c = 0; c < image.channels(); ++c)
    for (int y = 0; y < image.height(); ++y)
      for (int x = 0; x < image.width(); ++x) out(c, y, x) *= m.m(y, x);
  return out;
}

Image composite_doafn(const Image& source, const Image& afn, const Mask& bg, const VisibilityMap& svis) {
  if (!source.same_size(afn)) fail(ErrorKind::Parameter, "composite_doafn: source and flow image differ in size");
  require_same_size("composite_doafn", source, bg.m);
  require_same_size("composite_doafn", source, svis.m);
  Image out(source.channels(), source.height(), source.width());
  for (int y = 0; y < source.height(); ++y) {
    for (int x = 0; x < source.width(); ++x) {
      const float b = bg.m(y, x);
      const float v = svis.m(y, x);
      if (b > 0.0f && v > 0.0f) {
        fail(ErrorKind::Consistency, "composite_doafn: background and visibility masks overlap at (" +
                                         std::to_string(y) + ", " + std::to_string(x) + ")");
      }
      for (int c = 0; c < source.channels(); ++c) out(c, y, x) = source(c, y, x) * b + afn(c, y, x) * v;
    }
  }
  return out;
}

double hole_fraction(const Mask& bg, const VisibilityMap& svis) {
  require_same_size("hole_fraction", bg.m, svis.m);
  double covered = 0.0;
  for (std::size_t i = 0; i < bg.m.size(); ++i) covered += bg.m.storage()[i] + svis.m.storage()[i];
  return 1.0 - covered / static_cast<double>(bg.m.size());
}

Mask foreground(const GBuffer& g) { return Mask{g.fg}; }

}  // namespace tvsn::gt
