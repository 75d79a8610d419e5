#include "satpose/net/decode.hpp"

#include <cmath>

#include "satpose/util/errors.hpp"

SATPOSE_NS_BEGIN

namespace {
constexpr double kLogDepthClamp = 3.0;  // |dz| clamp before exp
constexpr double kLogSizeClamp = 6.0;   // |dw|,|dh| clamp in box decode
}  // namespace

Tensor decode_translations(const Tensor& raw, const AnchorSet& anchors,
                           const CameraIntrinsics& K, double z_ref) {
  if (raw.shape().size() != 3 || raw.dim(2) != 3 || raw.dim(1) != anchors.total()) {
    throw ShapeError("decode_translations: expected [N,A,3] matching the anchor set");
  }
  const int n = raw.dim(0);
  const int a = raw.dim(1);
  std::vector<real> out(static_cast<std::size_t>(raw.numel()));
  const auto in = raw.data();
  for (int ni = 0; ni < n; ++ni) {
    for (int ai = 0; ai < a; ++ai) {
      const std::size_t o = (static_cast<std::size_t>(ni) * a + ai) * 3;
      const Anchor& anc = anchors.anchors[static_cast<std::size_t>(ai)];
      const double du = static_cast<double>(in[o]);
      const double dv = static_cast<double>(in[o + 1]);
      const double dz = std::clamp(static_cast<double>(in[o + 2]), -kLogDepthClamp, kLogDepthClamp);
      const double z = z_ref * std::exp(dz);
      const double u = anc.cx + du * anc.w;
      const double v = anc.cy + dv * anc.h;
      out[o] = static_cast<real>((u - K.cx) / K.fx * z);
      out[o + 1] = static_cast<real>((v - K.cy) / K.fy * z);
      out[o + 2] = static_cast<real>(z);
    }
  }
  Tensor traw = raw;
  auto held = std::make_shared<std::vector<Anchor>>(anchors.anchors);
  return Tensor::make_op(
      raw.shape(), std::move(out), {raw}, [traw, held, K, z_ref, n, a](detail::Node& node) mutable {
        if (!traw.requires_grad()) return;
        auto g = traw.grad();
        const auto in = traw.data();
        for (int ni = 0; ni < n; ++ni) {
          for (int ai = 0; ai < a; ++ai) {
            const std::size_t o = (static_cast<std::size_t>(ni) * a + ai) * 3;
            const Anchor& anc = (*held)[static_cast<std::size_t>(ai)];
            const double dz_raw = static_cast<double>(in[o + 2]);
            const bool live = dz_raw > -kLogDepthClamp && dz_raw < kLogDepthClamp;
            const double dz = std::clamp(dz_raw, -kLogDepthClamp, kLogDepthClamp);
            const double z = z_ref * std::exp(dz);
            const double x = static_cast<double>(node.values[o]);
            const double y = static_cast<double>(node.values[o + 1]);
            const double gx = static_cast<double>(node.grad[o]);
            const double gy = static_cast<double>(node.grad[o + 1]);
            const double gz = static_cast<double>(node.grad[o + 2]);
            g[o] += static_cast<real>(gx * anc.w / K.fx * z);
            g[o + 1] += static_cast<real>(gy * anc.h / K.fy * z);
            if (live) {
              // x and y scale with z; z itself scales with dz.
              g[o + 2] += static_cast<real>(gx * x + gy * y + gz * z);
            }
          }
        }
      });
}

Tensor decode_boxes(const Tensor& deltas, const std::vector<Anchor>& row_anchors) {
  if (deltas.shape().size() != 2 || deltas.dim(1) != 4 ||
      static_cast<std::size_t>(deltas.dim(0)) != row_anchors.size()) {
    throw ShapeError("decode_boxes: expected [M,4] with one anchor per row");
  }
  const int m = deltas.dim(0);
  std::vector<real> out(static_cast<std::size_t>(m) * 4);
  const auto in = deltas.data();
  for (int i = 0; i < m; ++i) {
    const Anchor& a = row_anchors[static_cast<std::size_t>(i)];
    const std::size_t o = static_cast<std::size_t>(i) * 4;
    const double cx = a.cx + static_cast<double>(in[o]) * a.w;
    const double cy = a.cy + static_cast<double>(in[o + 1]) * a.h;
    const double w = a.w * std::exp(std::clamp(static_cast<double>(in[o + 2]), -kLogSizeClamp, kLogSizeClamp));
    const double h = a.h * std::exp(std::clamp(static_cast<double>(in[o + 3]), -kLogSizeClamp, kLogSizeClamp));
    out[o] = static_cast<real>(cx - w / 2);
    out[o + 1] = static_cast<real>(cy - h / 2);
    out[o + 2] = static_cast<real>(cx + w / 2);
    out[o + 3] = static_cast<real>(cy + h / 2);
  }
  Tensor td = deltas;
  std::vector<Anchor> held = row_anchors;
  return Tensor::make_op(
      {m, 4}, std::move(out), {deltas}, [td, held, m](detail::Node& node) mutable {
        if (!td.requires_grad()) return;
        auto g = td.grad();
        const auto in = td.data();
        for (int i = 0; i < m; ++i) {
          const Anchor& a = held[static_cast<std::size_t>(i)];
          const std::size_t o = static_cast<std::size_t>(i) * 4;
          const double dwr = static_cast<double>(in[o + 2]);
          const double dhr = static_cast<double>(in[o + 3]);
          const double w = a.w * std::exp(std::clamp(dwr, -kLogSizeClamp, kLogSizeClamp));
          const double h = a.h * std::exp(std::clamp(dhr, -kLogSizeClamp, kLogSizeClamp));
          const double g0 = static_cast<double>(node.grad[o]);
          const double g1 = static_cast<double>(node.grad[o + 1]);
          const double g2 = static_cast<double>(node.grad[o + 2]);
          const double g3 = static_cast<double>(node.grad[o + 3]);
          g[o] += static_cast<real>((g0 + g2) * a.w);
          g[o + 1] += static_cast<real>((g1 + g3) * a.h);
          if (std::abs(dwr) < kLogSizeClamp) g[o + 2] += static_cast<real>((g2 - g0) * w / 2);
          if (std::abs(dhr) < kLogSizeClamp) g[o + 3] += static_cast<real>((g3 - g1) * h / 2);
        }
      });
}

std::optional<Detection> decode_detections(const NetworkOutput& output, const AnchorSet& anchors,
                                           double score_thresh, int batch_index) {
  if (!output.obj_logits.defined()) throw ShapeError("decode_detections: detection head not run");
  const int a = output.obj_logits.dim(1);
  const auto logits = output.obj_logits.data();
  const std::size_t base = static_cast<std::size_t>(batch_index) * a;
  int best = 0;
  for (int i = 1; i < a; ++i) {
    if (logits[base + static_cast<std::size_t>(i)] > logits[base + static_cast<std::size_t>(best)]) best = i;
  }
  const double score = 1.0 / (1.0 + std::exp(-static_cast<double>(logits[base + static_cast<std::size_t>(best)])));
  if (score < score_thresh) return std::nullopt;

  Detection det;
  det.anchor_index = best;
  det.score = score;
  const auto bd = output.box_deltas.data();
  const std::size_t bo = (static_cast<std::size_t>(batch_index) * a + best) * 4;
  det.box = decode_box(anchors.anchors[static_cast<std::size_t>(best)],
                       {static_cast<double>(bd[bo]), static_cast<double>(bd[bo + 1]),
                        static_cast<double>(bd[bo + 2]), static_cast<double>(bd[bo + 3])});
  const auto rd = output.rot6d.data();
  const std::size_t ro = (static_cast<std::size_t>(batch_index) * a + best) * 6;
  Rot6d r6;
  r6.r1 = Vec3(rd[ro], rd[ro + 1], rd[ro + 2]);
  r6.r2 = Vec3(rd[ro + 3], rd[ro + 4], rd[ro + 5]);
  det.rotation = rot6d_to_matrix(r6);
  const auto td = output.translation.data();
  const std::size_t to = (static_cast<std::size_t>(batch_index) * a + best) * 3;
  det.translation = Vec3(td[to], td[to + 1], td[to + 2]);
  return det;
}

std::vector<DecodedKeypoint> decode_heatmaps(const Tensor& heatmaps, int batch_index, int stride) {
  if (!heatmaps.defined() || heatmaps.shape().size() != 4) {
    throw ShapeError("decode_heatmaps: expected [N,K,h,w]");
  }
  const int k = heatmaps.dim(1), h = heatmaps.dim(2), w = heatmaps.dim(3);
  const auto data = heatmaps.data();
  std::vector<DecodedKeypoint> out(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const real* plane =
        data.data() + (static_cast<std::size_t>(batch_index) * k + c) * h * w;
    int best = 0;
    for (int i = 1; i < h * w; ++i) {
      if (plane[i] > plane[best]) best = i;
    }
    const int by = best / w, bx = best % w;
    const double peak = static_cast<double>(plane[best]);

    // Weighted 3x3 centroid around the peak for sub-cell recovery.
    double sw = 0, sx = 0, sy = 0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int yy = by + dy, xx = bx + dx;
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
        const double v = std::max(0.0, static_cast<double>(plane[yy * w + xx]));
        sw += v;
        sx += v * xx;
        sy += v * yy;
      }
    }
    const double cx = sw > 1e-12 ? sx / sw : bx;
    const double cy = sw > 1e-12 ? sy / sw : by;
    out[static_cast<std::size_t>(c)] = {(cx + 0.5) * stride, (cy + 0.5) * stride, peak};
  }
  return out;
}

PosePrediction predict_pose(const NetworkOutput& output, int batch_index, const AnchorSet& anchors,
                            const CameraIntrinsics& K, std::span<const Vec3> keypoints3d,
                            const PredictOptions& opt) {
  PosePrediction pred;

  std::optional<Detection> det;
  if (output.obj_logits.defined()) {
    det = decode_detections(output, anchors, opt.score_thresh, batch_index);
    if (!det) {
      // Keep a pose for metric purposes; record that confidence was low.
      det = decode_detections(output, anchors, -1.0, batch_index);
      pred.low_confidence = true;
    }
  }

  if (output.heatmaps.defined()) {
    const auto kps = decode_heatmaps(output.heatmaps, batch_index);
    std::vector<Vec2> pts2d;
    std::vector<Vec3> pts3d;
    std::vector<double> weights;
    for (std::size_t i = 0; i < kps.size() && i < keypoints3d.size(); ++i) {
      if (kps[i].confidence >= opt.keypoint_conf_thresh) {
        pts2d.emplace_back(kps[i].u, kps[i].v);
        pts3d.push_back(keypoints3d[i]);
        weights.push_back(std::min(1.0, kps[i].confidence));
      }
    }
    if (pts2d.size() >= 4) {
      const PnpResult pnp = pnp_solve(pts2d, pts3d, K, weights);
      if (pnp.ok) {
        pred.pnp_ok = true;
        pred.hh_pose = pnp.pose;
        pred.pnp_rms_px = pnp.rms_px;
        pred.hh_outlier = !frustum_inlier(pnp.pose.t, K, opt.frustum_z_min, opt.frustum_z_max);
      }
    }
  }

  if (det) {
    pred.has_pose = true;
    pred.box = det->box;
    pred.score = det->score;
    pred.pose.t = det->translation;
    if (pred.pnp_ok && !pred.hh_outlier) {
      pred.pose.R = pred.hh_pose.R;
      pred.rot_source = RotationSource::HeatmapPnp;
    } else {
      pred.pose.R = det->rotation;
      pred.rot_source = RotationSource::Regression;
    }
  } else if (pred.pnp_ok && !pred.hh_outlier) {
    // No detection head: full pose from the keypoints.
    pred.has_pose = true;
    pred.pose = pred.hh_pose;
    pred.rot_source = RotationSource::HeatmapPnp;
  }
  return pred;
}

SATPOSE_NS_END
