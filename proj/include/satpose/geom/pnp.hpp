#pragma once

#include <span>
#include <string>

#include "satpose/geom/geometry.hpp"

namespace satpose {

struct PnpResult {
  bool ok = false;
  Pose pose;
  double rms_px = 0.0;  // final unweighted RMS reprojection error
  int iterations = 0;
  std::string failure;  // set when !ok
};

// Pose from 2D-3D correspondences: DLT initialization (n >= 6; smaller sets
// fall back to a multi-start initialization) followed by damped Gauss-Newton
// on the weighted pixel reprojection residuals.
PnpResult pnp_solve(std::span<const Vec2> points2d, std::span<const Vec3> points3d,
                    const CameraIntrinsics& K, std::span<const double> weights = {});

}  // namespace satpose
