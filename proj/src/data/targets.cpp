#include "satpose/data/targets.hpp"

#include <cmath>

#include "satpose/loss/losses.hpp"
#include "satpose/util/errors.hpp"

SATPOSE_NS_BEGIN

Tensor make_heatmap_targets(std::span<const KeypointLabel> keypoints, double sigma_px, int out_h,
                            int out_w, int stride) {
  const int k = static_cast<int>(keypoints.size());
  std::vector<real> data(static_cast<std::size_t>(k) * out_h * out_w, real(0));
  const double inv2s2 = 1.0 / (2.0 * sigma_px * sigma_px);
  for (int c = 0; c < k; ++c) {
    const auto& kp = keypoints[static_cast<std::size_t>(c)];
    if (!kp.visible) continue;
    const int cx = static_cast<int>(std::floor(kp.u / stride));
    const int cy = static_cast<int>(std::floor(kp.v / stride));
    if (cx < 0 || cx >= out_w || cy < 0 || cy >= out_h) continue;
    real* plane = data.data() + static_cast<std::size_t>(c) * out_h * out_w;
    const int reach = static_cast<int>(std::ceil(4.0 * sigma_px));
    for (int y = std::max(0, cy - reach); y <= std::min(out_h - 1, cy + reach); ++y) {
      for (int x = std::max(0, cx - reach); x <= std::min(out_w - 1, cx + reach); ++x) {
        const double d2 = static_cast<double>((x - cx) * (x - cx) + (y - cy) * (y - cy));
        plane[y * out_w + x] = static_cast<real>(std::exp(-d2 * inv2s2));
      }
    }
  }
  return Tensor::from_data({k, out_h, out_w}, std::move(data));
}

std::vector<real> heatmap_channel_weights(std::span<const KeypointLabel> keypoints) {
  std::vector<real> w(keypoints.size());
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    w[i] = keypoints[i].visible ? real(1) : real(0);
  }
  return w;
}

Tensor seg_target_from_mask(const Image8& mask, int out_h, int out_w) {
  if (mask.width % out_w || mask.height % out_h) {
    throw ShapeError("seg_target_from_mask: mask size not divisible by target size");
  }
  const int sx = mask.width / out_w;
  const int sy = mask.height / out_h;
  std::vector<real> data(static_cast<std::size_t>(out_h) * out_w);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      long long acc = 0;
      for (int yy = y * sy; yy < (y + 1) * sy; ++yy) {
        for (int xx = x * sx; xx < (x + 1) * sx; ++xx) acc += mask.at(xx, yy) > 127;
      }
      data[static_cast<std::size_t>(y) * out_w + x] =
          (2 * acc >= sx * sy) && acc > 0 ? real(1) : real(0);
    }
  }
  return Tensor::from_data({1, out_h, out_w}, std::move(data));
}

AnchorTargets assign_anchors(const AnchorSet& anchors, const std::array<double, 4>& gt_box,
                             double pos_iou, double neg_iou) {
  AnchorTargets t;
  t.cls.assign(static_cast<std::size_t>(anchors.total()), kAnchorNegative);
  double best = -1.0;
  for (int i = 0; i < anchors.total(); ++i) {
    const double iou = box_iou(anchor_box(anchors.anchors[static_cast<std::size_t>(i)]), gt_box);
    if (iou >= pos_iou) {
      t.cls[static_cast<std::size_t>(i)] = kAnchorPositive;
    } else if (iou >= neg_iou) {
      t.cls[static_cast<std::size_t>(i)] = kAnchorIgnore;
    }
    if (iou > best) {
      best = iou;
      t.best_anchor = i;
    }
  }
  if (t.best_anchor >= 0) t.cls[static_cast<std::size_t>(t.best_anchor)] = kAnchorPositive;
  for (int i = 0; i < anchors.total(); ++i) {
    if (t.cls[static_cast<std::size_t>(i)] == kAnchorPositive) t.positive_rows.push_back(i);
  }
  return t;
}

SATPOSE_NS_END
