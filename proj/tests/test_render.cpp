#include "doctest.h"

#include <random>
#include <sstream>

#include "oracles/geometry.hpp"
#include "tvsn/core/error.hpp"
#include "tvsn/render/camera.hpp"
#include "tvsn/render/obj.hpp"
#include "tvsn/render/procedural.hpp"
#include "tvsn/render/rasterizer.hpp"

using namespace tvsn;
using namespace tvsn::render;

TEST_CASE("camera projection agrees with a homogeneous look-at model") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double el : {0.0, 15.0, 30.0}) {
    for (double az = 0.0; az < 360.0; az += 40.0) {
      const CameraModel cam = make_camera(az, el, 2.5, 64);
      const oracle::Camera ref = oracle::make_camera(az, el, 2.5, 64);
      CHECK(cam.center.x() == doctest::Approx(ref.eye[0]).epsilon(1e-12));
      CHECK(cam.center.y() == doctest::Approx(ref.eye[1]).epsilon(1e-12));
      CHECK(cam.center.z() == doctest::Approx(ref.eye[2]).epsilon(1e-12));
      for (int i = 0; i < 20; ++i) {
        const Eigen::Vector3d x(u(rng), u(rng), u(rng));
        const Eigen::Vector3d c = cam.to_camera(x);
        const Eigen::Vector3d h = cam.intrinsics * c;
        const auto p = oracle::project(ref, {x.x(), x.y(), x.z()});
        REQUIRE(p.has_value());
        CHECK(h.y() / h.z() == doctest::Approx(p->h).epsilon(1e-9));
        CHECK(h.x() / h.z() == doctest::Approx(p->w).epsilon(1e-9));
        CHECK(c.z() == doctest::Approx(p->depth).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("origin projects to the principal point and +y is up in the image") {
  const CameraModel cam = make_camera(70.0, 20.0, 2.5, 64);
  Eigen::Vector3d c = cam.intrinsics * cam.to_camera(Eigen::Vector3d::Zero());
  CHECK(c.y() / c.z() == doctest::Approx(31.5));
  CHECK(c.x() / c.z() == doctest::Approx(31.5));
  c = cam.intrinsics * cam.to_camera(Eigen::Vector3d(0.0, 0.5, 0.0));
  CHECK(c.y() / c.z() < 31.5);
}

TEST_CASE("rasterized depth and coverage match brute-force ray casting") {
  const Mesh mesh = make_procedural_object(3, ObjectKind::CarLike);
  for (double az : {0.0, 100.0, 220.0}) {
    const CameraModel cam = make_camera(az, 20.0, 2.5, 48);
    const oracle::Camera ref = oracle::make_camera(az, 20.0, 2.5, 48);
    const GBuffer g = rasterize(mesh, cam);
    int checked = 0;
    int agree = 0;
    for (int y = 1; y + 1 < 48; ++y) {
      for (int x = 1; x + 1 < 48; ++x) {
        const oracle::Hit hit = oracle::cast(mesh, ref.eye, oracle::pixel_ray(ref, y, x));
        const bool fg = hit.triangle >= 0;
        ++checked;
        if (fg != (g.fg(y, x) > 0.5f)) continue;
        if (!fg) {
          ++agree;
          continue;
        }
        const double depth = oracle::to_camera(ref, hit.point)[2];
        if (std::abs(depth - g.depth(y, x)) < 1e-4) ++agree;
      }
    }
    CHECK(static_cast<double>(agree) / checked >= 0.995);
  }
}

TEST_CASE("procedural objects are deterministic, watertight and mirror symmetric") {
  for (auto kind : {ObjectKind::CarLike, ObjectKind::ChairLike, ObjectKind::BlockStack}) {
    const Mesh a = make_procedural_object(11, kind);
    const Mesh b = make_procedural_object(11, kind);
    CHECK(a.vertices == b.vertices);
    CHECK(a.triangles == b.triangles);
    CHECK(is_watertight(a));
    CHECK_NOTHROW(validate_mesh(a));
    // Every vertex has a mirror partner across z = 0.
    for (const auto& v : a.vertices) {
      bool found = false;
      for (const auto& w : a.vertices) found = found || (w - Eigen::Vector3d(v.x(), v.y(), -v.z())).norm() < 1e-12;
      CHECK(found);
    }
  }
  CHECK(parse_object_kind("car-like") == ObjectKind::CarLike);
  CHECK_THROWS_AS(parse_object_kind("boat"), Error);
}

TEST_CASE("OBJ parsing triangulates polygons and fits the unit box") {
  std::istringstream in(
      "# quad\n"
      "v -2 -2 0\nv 2 -2 0\nv 2 2 0\nv -2 2 0\n"
      "vt 0 0\n"
      "f 1 2 3 4\n");
  const Mesh m = parse_obj(in);
  CHECK(m.triangles.size() == 2);
  for (const auto& v : m.vertices) CHECK(v.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  std::istringstream bad("v 0 0 0\nf 1 2 3\n");
  CHECK_THROWS_AS(parse_obj(bad), Error);
}
