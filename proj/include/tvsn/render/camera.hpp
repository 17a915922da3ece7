#pragma once

#include <Eigen/Core>

namespace tvsn::render {

// Pinhole camera on a sphere around the origin, looking at the origin with +y
// up. Camera frame follows the x-right / y-down / z-forward convention, so the
// intrinsic matrix has positive focal terms and pixel centers sit at integer
// coordinates (h, w) with the principal point at ((size-1)/2, (size-1)/2).
struct CameraModel {
  double azimuth = 0.0;    // degrees, about +y
  double elevation = 0.0;  // degrees
  double radius = 0.0;
  int size = 0;
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();  // P
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();    // world -> camera
  Eigen::Vector3d center = Eigen::Vector3d::Zero();          // c

  double focal() const { return intrinsics(0, 0); }
  double principal() const { return intrinsics(0, 2); }

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const { return rotation * (world - center); }

  // Unit direction (world frame) of the ray through continuous pixel (h, w).
  Eigen::Vector3d ray_direction(double h, double w) const;
};

// Default focal length as a fraction of the image size.
inline constexpr double kDefaultFocalScale = 0.75;
inline constexpr double kDefaultRadius = 2.5;

CameraModel make_camera(double azimuth, double elevation, double radius, int size,
                        double focal_scale = kDefaultFocalScale);

// Rotation about +y by `degrees` (right-handed).
Eigen::Matrix3d rotation_y(double degrees);

}  // namespace tvsn::render
