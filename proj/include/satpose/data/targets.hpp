#pragma once

#include "satpose/data/dataset.hpp"
#include "satpose/net/anchors.hpp"

SATPOSE_NS_BEGIN

// Ground-truth heatmaps at 1/stride resolution: unit-peak Gaussian snapped to
// the keypoint's cell, zero maps for invisible keypoints.
Tensor make_heatmap_targets(std::span<const KeypointLabel> keypoints, double sigma_px, int out_h,
                            int out_w, int stride = 4);

// Per-channel visibility weights matching make_heatmap_targets.
std::vector<real> heatmap_channel_weights(std::span<const KeypointLabel> keypoints);

// Binary segmentation target: block-mean of the mask thresholded at 0.5.
Tensor seg_target_from_mask(const Image8& mask, int out_h, int out_w);

struct AnchorTargets {
  std::vector<signed char> cls;     // kAnchorPositive / kAnchorNegative / kAnchorIgnore
  std::vector<int> positive_rows;   // ascending anchor indices
  int best_anchor = -1;
};

// IoU-based assignment: positives at >= pos_iou plus the single best-IoU
// anchor (always), negatives below neg_iou, the rest ignored.
AnchorTargets assign_anchors(const AnchorSet& anchors, const std::array<double, 4>& gt_box,
                             double pos_iou = 0.5, double neg_iou = 0.4);

SATPOSE_NS_END
