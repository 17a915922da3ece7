#include "tvsn/render/camera.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <string>

#include "tvsn/core/error.hpp"

namespace tvsn::render {

namespace {
double radians(double deg) { return deg * std::numbers::pi / 180.0; }
}  // namespace

Eigen::Matrix3d rotation_y(double degrees) {
  const double a = radians(degrees);
  const double c = std::cos(a);
  const double s = std::sin(a);
  Eigen::Matrix3d r;
  r << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  return r;
}

Eigen::Vector3d CameraModel::ray_direction(double h, double w) const {
  const Eigen::Vector3d cam((w - intrinsics(0, 2)) / intrinsics(0, 0), (h - intrinsics(1, 2)) / intrinsics(1, 1), 1.0);
  return (rotation.transpose() * cam).normalized();
}

CameraModel make_camera(double azimuth, double elevation, double radius, int size, double focal_scale) {
  if (!std::isfinite(azimuth) || !std::isfinite(elevation) || !std::isfinite(radius) || !std::isfinite(focal_scale)) {
    fail(ErrorKind::Parameter, "camera parameters must be finite");
  }
  if (size < 8) fail(ErrorKind::Parameter, "image size must be >= 8, got " + std::to_string(size));
  if (radius <= 0.0) fail(ErrorKind::Parameter, "camera radius must be positive");
  if (focal_scale <= 0.0) fail(ErrorKind::Parameter, "focal scale must be positive");
  if (std::abs(elevation) >= 89.0) fail(ErrorKind::Parameter, "elevation must lie in (-89, 89) degrees");

  CameraModel cam;
  cam.azimuth = azimuth;
  cam.elevation = elevation;
  cam.radius = radius;
  cam.size = size;

  const double el = radians(elevation);
  // Azimuth 0 looks down -z from +z; increasing azimuth swings the camera
  // about +y, which is the same as rotating the object by R_y(-azimuth).
  const Eigen::Vector3d base(0.0, radius * std::sin(el), radius * std::cos(el));
  const Eigen::Matrix3d ry = rotation_y(azimuth);
  cam.center = ry * base;

  const Eigen::Vector3d forward = (-base).normalized();
  const Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitY()).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d base_rot;
  base_rot.row(0) = right.transpose();
  base_rot.row(1) = down.transpose();
  base_rot.row(2) = forward.transpose();
  cam.rotation = base_rot * ry.transpose();

  const double f = focal_scale * size;
  const double c = 0.5 * (size - 1);
  cam.intrinsics << f, 0.0, c, 0.0, f, c, 0.0, 0.0, 1.0;
  return cam;
}

}  // namespace tvsn::render
