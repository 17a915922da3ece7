#pragma once

#include <Eigen/Core>

#include "tvsn/core/grid.hpp"
#include "tvsn/render/camera.hpp"
#include "tvsn/render/rasterizer.hpp"

namespace tvsn::gt {

// Continuous source-image coordinates for every target pixel. Entries with
// valid == 0 hold NaN in both coordinate planes.
struct FlowField {
  Grid<float> fy;
  Grid<float> fx;
  Grid<float> valid;

  int height() const { return valid.height(); }
  int width() const { return valid.width(); }
};

// Values in [0,1]; ground-truth maps are binary.
struct VisibilityMap {
  Grid<float> m;
};

// Binary.
struct Mask {
  Grid<float> m;
};

struct Projection {
  double h = 0.0;
  double w = 0.0;
  double depth = 0.0;
  bool valid = false;  // false when the point is on or behind the camera plane
};

// Rotates x by the azimuth change theta (equivalently: moves the camera from
// cam.azimuth to cam.azimuth + theta) and projects with the pinhole model.
Projection project(const Eigen::Vector3d& x, const render::CameraModel& cam, double theta);

struct VisibilityOptions {
  double depth_tolerance = 1e-3;  // in units of the camera radius
};

// Defined on the target grid: 1 where the target foreground point is seen by
// the source camera `cam`. `tgt` must be rendered at cam.azimuth + theta.
VisibilityMap visibility_map(const render::GBuffer& src, const render::GBuffer& tgt, double theta,
                             const render::CameraModel& cam, const VisibilityOptions& options = {});
// Same test on the z-mirrored target points, OR-ed with visibility_map.
VisibilityMap symmetry_visibility_map(const render::GBuffer& src, const render::GBuffer& tgt, double theta,
                                      const render::CameraModel& cam, const VisibilityOptions& options = {});
// Only the mirrored half of the above.
VisibilityMap mirrored_visibility_map(const render::GBuffer& src, const render::GBuffer& tgt, double theta,
                                      const render::CameraModel& cam, const VisibilityOptions& options = {});

// 1 where the pixel is background in both views.
Mask background_mask(const Mask& fg_s, const Mask& fg_t);

FlowField gt_flow(const render::GBuffer& src, const render::GBuffer& tgt, double theta, const render::CameraModel& cam,
                  const VisibilityOptions& options = {});

// Bilinear backward warp; invalid entries produce zeros.
Image warp(const Image& source, const FlowField& flow);

Image mat_visibility(const Image& image, const VisibilityMap& m);

// I_s * M_bg + I_afn * M_svis. Overlapping masks raise a consistency error.
Image composite_doafn(const Image& source, const Image& afn, const Mask& bg, const VisibilityMap& svis);

// Fraction of pixels covered by neither mask.
double hole_fraction(const Mask& bg, const VisibilityMap& svis);

Mask foreground(const render::GBuffer& g);

}  // namespace tvsn::gt
