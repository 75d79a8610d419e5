#pragma once

#include <optional>

#include "satpose/geom/metrics.hpp"
#include "satpose/geom/pnp.hpp"
#include "satpose/net/model.hpp"

SATPOSE_NS_BEGIN

// Differentiable anchor-relative decodes (used inside forward / the losses).
// Translation: pixel offset scaled by the anchor box plus a log-depth around
// z_ref, backprojected through the pinhole model to meters.
Tensor decode_translations(const Tensor& raw, const AnchorSet& anchors,
                           const CameraIntrinsics& K, double z_ref);
// Boxes for a gathered [M,4] delta tensor; anchor list matches rows.
Tensor decode_boxes(const Tensor& deltas, const std::vector<Anchor>& row_anchors);

struct Detection {
  int anchor_index = -1;
  double score = 0;  // sigmoid objectness
  std::array<double, 4> box{};
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

// Highest-objectness anchor (single-target assumption). Empty when every
// score is below the threshold.
std::optional<Detection> decode_detections(const NetworkOutput& output, const AnchorSet& anchors,
                                           double score_thresh, int batch_index);

struct DecodedKeypoint {
  double u = 0, v = 0;   // input pixels
  double confidence = 0;  // heatmap peak value
};

std::vector<DecodedKeypoint> decode_heatmaps(const Tensor& heatmaps, int batch_index,
                                             int stride = 4);

struct PosePrediction {
  bool has_pose = false;
  Pose pose;                     // fused: t from the regression head, R per rot_source
  RotationSource rot_source = RotationSource::None;
  bool low_confidence = false;   // no anchor above threshold (argmax fallback used)
  std::array<double, 4> box{};   // decoded detection box
  double score = 0;
  bool pnp_ok = false;
  Pose hh_pose;                  // keypoint-derived pose when pnp_ok
  double pnp_rms_px = 0;
  bool hh_outlier = false;       // keypoint translation rejected by the frustum test
};

struct PredictOptions {
  double score_thresh = 0.05;
  double keypoint_conf_thresh = 0.3;
  double frustum_z_min = 0.0;
  double frustum_z_max = 50.0;
};

// Fuses the heads: translation from the regression head, rotation from
// keypoints+PnP with fallback to the regressed rotation when PnP fails or
// its translation lands outside the viewing frustum.
PosePrediction predict_pose(const NetworkOutput& output, int batch_index, const AnchorSet& anchors,
                            const CameraIntrinsics& K, std::span<const Vec3> keypoints3d,
                            const PredictOptions& opt = {});

SATPOSE_NS_END
