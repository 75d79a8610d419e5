#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "satpose/data/domain.hpp"
#include "satpose/data/model3d.hpp"
#include "satpose/geom/geometry.hpp"
#include "satpose/util/image.hpp"

namespace satpose {

struct KeypointLabel {
  double u = 0;
  double v = 0;
  bool visible = false;
};

struct RenderedSample {
  Image8 image;
  Image8 mask;
  Pose pose;
  std::vector<KeypointLabel> keypoints;
  std::array<double, 4> bbox{};  // tight xyxy box of the mask, pixels
};

// Z-buffered rasterization of the target with Lambertian + Blinn-Phong
// shading, procedural per-face textures, domain-dependent background and
// sensor noise. Deterministic in (pose, domain, K, seed).
RenderedSample render_scene(const Pose& pose, const DomainParams& domain,
                            const CameraIntrinsics& K, std::uint64_t seed,
                            const TargetModel& model = TargetModel::standard());

}  // namespace satpose
