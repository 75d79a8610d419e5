#pragma once

#include <string>
#include <vector>

#include "satpose/geom/geometry.hpp"

namespace satpose {

// Which path produced the fused rotation of a sample.
enum class RotationSource { HeatmapPnp, Regression, None };

struct SampleMetrics {
  std::string filename;
  double e_t = 0;        // meters (fused prediction)
  double e_r_deg = 0;    // degrees (fused prediction)
  double e_pose = 0;     // rotation in radians + normalized translation
  double e_pose_star = 0;
  double iou = 0;        // predicted vs ground-truth box
  bool hh_outlier = false;  // keypoint-derived translation rejected by frustum
  bool pnp_ok = false;
  double hh_e_t = 0;     // translation error of the keypoint-derived pose
  double hh_e_r_deg = 0;
  RotationSource rot_source = RotationSource::None;
  bool low_confidence = false;  // no anchor above the detection threshold
};

struct MetricsReport {
  std::vector<SampleMetrics> samples;

  // Aggregates. The keypoint-head translation mean excludes frustum outliers;
  // everything else includes all samples.
  double mean_e_t = 0;
  double mean_e_r_deg = 0;
  double mean_e_pose = 0;
  double mean_e_pose_star = 0;
  double mean_iou = 0;
  double hh_e_t_mean = 0;    // over PnP successes that are frustum inliers
  double hh_e_r_deg_mean = 0;
  long long outlier_count = 0;
  long long pnp_fail_count = 0;
  long long low_confidence_count = 0;

  void finalize();  // fills the aggregates from samples
};

}  // namespace satpose
