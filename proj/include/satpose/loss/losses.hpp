#pragma once

#include <array>
#include <span>
#include <vector>

#include "satpose/core/tensor.hpp"
#include "satpose/geom/geometry.hpp"

SATPOSE_NS_BEGIN

struct FocalConfig {
  double alpha = 0.25;
  double gamma = 2.0;  // focusing exponent
};

// Anchor classification target labels.
inline constexpr signed char kAnchorPositive = 1;
inline constexpr signed char kAnchorNegative = 0;
inline constexpr signed char kAnchorIgnore = -1;

// Alpha-balanced focal loss over non-ignored anchors, normalized by the
// positive count (at least 1). `targets` runs over logits.numel().
Tensor focal_loss(const Tensor& logits, std::span<const signed char> targets,
                  const FocalConfig& cfg = {});

// Complete-IoU loss, averaged over the [M,4] predicted xyxy boxes against a
// single ground-truth box. Fully differentiated (including the aspect-ratio
// trade-off coefficient) so finite differences match.
Tensor ciou_loss(const Tensor& boxes_pred, const std::array<double, 4>& box_gt);

// Rotation error (radians, clamped arccos) plus normalized translation error,
// averaged over the [M,6]/[M,3] per-anchor predictions.
Tensor speed_loss(const Tensor& rot6d_pred, const Tensor& trans_pred, const Pose& pose_gt);

// Plain mean squared error over every element.
Tensor heatmap_mse(const Tensor& pred, const Tensor& target);

// Variant with per-channel weights ([N*K], usually keypoint visibility):
// numerator runs over all channels, normalization counts weighted channels
// only, per sample. Invisible channels still regress toward their (zero)
// targets.
Tensor heatmap_mse_weighted(const Tensor& pred, const Tensor& target,
                            std::span<const real> channel_weights);

// Pixel-wise binary cross entropy with logits, mean over all elements.
Tensor seg_bce(const Tensor& logits, const Tensor& mask);

enum class EntropyForm {
  PaperLiteral,  // -sum sigma * log(sigma)
  FullBinary     // adds -(1-sigma) * log(1-sigma)
};

// Segmentation-confidence objective; sums over all pixels.
Tensor entropy_loss(const Tensor& seg_logits, EntropyForm form = EntropyForm::PaperLiteral);

// Unweighted sum of the active heads' losses.
Tensor total_loss(const std::vector<Tensor>& head_losses);

SATPOSE_NS_END
