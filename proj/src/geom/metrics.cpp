#include "satpose/geom/metrics.hpp"

namespace satpose {

void MetricsReport::finalize() {
  mean_e_t = mean_e_r_deg = mean_e_pose = mean_e_pose_star = mean_iou = 0;
  hh_e_t_mean = hh_e_r_deg_mean = 0;
  outlier_count = pnp_fail_count = low_confidence_count = 0;
  if (samples.empty()) return;

  long long hh_inliers = 0;
  for (const auto& s : samples) {
    mean_e_t += s.e_t;
    mean_e_r_deg += s.e_r_deg;
    mean_e_pose += s.e_pose;
    mean_e_pose_star += s.e_pose_star;
    mean_iou += s.iou;
    if (s.hh_outlier) ++outlier_count;
    if (!s.pnp_ok) ++pnp_fail_count;
    if (s.low_confidence) ++low_confidence_count;
    if (s.pnp_ok && !s.hh_outlier) {
      hh_e_t_mean += s.hh_e_t;
      hh_e_r_deg_mean += s.hh_e_r_deg;
      ++hh_inliers;
    }
  }
  const double n = static_cast<double>(samples.size());
  mean_e_t /= n;
  mean_e_r_deg /= n;
  mean_e_pose /= n;
  mean_e_pose_star /= n;
  mean_iou /= n;
  if (hh_inliers > 0) {
    hh_e_t_mean /= static_cast<double>(hh_inliers);
    hh_e_r_deg_mean /= static_cast<double>(hh_inliers);
  }
}

}  // namespace satpose
