#include "satpose/loss/losses.hpp"

#include <cmath>

#include "satpose/core/ops.hpp"
#include "satpose/util/errors.hpp"

SATPOSE_NS_BEGIN

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kClampMargin = 1e-7;  // arccos argument clamp for speed_loss

}  // namespace

Tensor focal_loss(const Tensor& logits, std::span<const signed char> targets,
                  const FocalConfig& cfg) {
  if (static_cast<std::size_t>(logits.numel()) != targets.size()) {
    throw ShapeError("focal_loss: logits/targets size mismatch");
  }
  const double alpha = cfg.alpha;
  const double gamma = cfg.gamma;
  long long npos = 0;
  for (const signed char t : targets) npos += t == kAnchorPositive;
  const double norm = 1.0 / static_cast<double>(std::max<long long>(1, npos));

  double loss = 0.0;
  const auto in = logits.data();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == kAnchorIgnore) continue;
    const double x = static_cast<double>(in[i]);
    const double log_p = -softplus(-x);
    const double log_q = -x - softplus(-x);  // log(1-p)
    const double p = sigmoid_d(x);
    if (targets[i] == kAnchorPositive) {
      loss += -alpha * std::pow(1.0 - p, gamma) * log_p;
    } else {
      loss += -(1.0 - alpha) * std::pow(p, gamma) * log_q;
    }
  }
  loss *= norm;

  Tensor tl = logits;
  std::vector<signed char> held(targets.begin(), targets.end());
  return Tensor::make_op(
      {1}, {static_cast<real>(loss)}, {logits},
      [tl, held, alpha, gamma, norm](detail::Node& node) mutable {
        if (!tl.requires_grad()) return;
        const double up = static_cast<double>(node.grad[0]) * norm;
        auto g = tl.grad();
        const auto in = tl.data();
        for (std::size_t i = 0; i < held.size(); ++i) {
          if (held[i] == kAnchorIgnore) continue;
          const double x = static_cast<double>(in[i]);
          const double p = sigmoid_d(x);
          const double log_p = -softplus(-x);
          const double log_q = -x - softplus(-x);
          double d;
          if (held[i] == kAnchorPositive) {
            d = alpha * std::pow(1.0 - p, gamma) * (gamma * p * log_p - (1.0 - p));
          } else {
            d = (1.0 - alpha) * std::pow(p, gamma) * (p - gamma * (1.0 - p) * log_q);
          }
          g[i] += static_cast<real>(up * d);
        }
      });
}

namespace {

struct CiouGrad {
  double d[4];
};

double ciou_single(const double b[4], const std::array<double, 4>& g, CiouGrad* grad) {
  const double eps = 1e-10;
  const double wp = b[2] - b[0], hp = b[3] - b[1];
  const double wg = g[2] - g[0], hg = g[3] - g[1];
  if (wp <= 0 || hp <= 0 || wg <= 0 || hg <= 0) {
    throw NumericalError("ciou_loss: degenerate box");
  }
  const double area_p = wp * hp, area_g = wg * hg;

  const double ix0 = std::max(b[0], g[0]), iy0 = std::max(b[1], g[1]);
  const double ix1 = std::min(b[2], g[2]), iy1 = std::min(b[3], g[3]);
  const double iw = std::max(0.0, ix1 - ix0), ih = std::max(0.0, iy1 - iy0);
  const double inter = iw * ih;
  const double uni = area_p + area_g - inter;
  const double iou = inter / uni;

  const double cxp = 0.5 * (b[0] + b[2]), cyp = 0.5 * (b[1] + b[3]);
  const double cxg = 0.5 * (g[0] + g[2]), cyg = 0.5 * (g[1] + g[3]);
  const double rho2 = (cxp - cxg) * (cxp - cxg) + (cyp - cyg) * (cyp - cyg);
  const double cw = std::max(b[2], g[2]) - std::min(b[0], g[0]);
  const double ch = std::max(b[3], g[3]) - std::min(b[1], g[1]);
  const double c2 = cw * cw + ch * ch + eps;

  const double datan = std::atan(wg / hg) - std::atan(wp / hp);
  const double v = (4.0 / (kPi * kPi)) * datan * datan;
  const double denom = 1.0 - iou + v + eps;
  const double alpha_v = v / denom;

  const double loss = 1.0 - iou + rho2 / c2 + alpha_v * v;
  if (!grad) return loss;

  // dIoU
  double diw[4] = {0, 0, 0, 0}, dih[4] = {0, 0, 0, 0};
  if (iw > 0 && ih > 0) {
    diw[0] = (b[0] > g[0]) ? -1.0 : 0.0;
    diw[2] = (b[2] < g[2]) ? 1.0 : 0.0;
    dih[1] = (b[1] > g[1]) ? -1.0 : 0.0;
    dih[3] = (b[3] < g[3]) ? 1.0 : 0.0;
  }
  double dinter[4], darea[4], diou[4];
  darea[0] = -hp;
  darea[1] = -wp;
  darea[2] = hp;
  darea[3] = wp;
  for (int i = 0; i < 4; ++i) {
    dinter[i] = diw[i] * ih + iw * dih[i];
    const double duni = darea[i] - dinter[i];
    diou[i] = (dinter[i] * uni - inter * duni) / (uni * uni);
  }

  // d(rho2/c2)
  double dcw[4] = {0, 0, 0, 0}, dch[4] = {0, 0, 0, 0};
  dcw[0] = (b[0] < g[0]) ? -1.0 : 0.0;
  dcw[2] = (b[2] > g[2]) ? 1.0 : 0.0;
  dch[1] = (b[1] < g[1]) ? -1.0 : 0.0;
  dch[3] = (b[3] > g[3]) ? 1.0 : 0.0;
  double ddist[4];
  const double dx = cxp - cxg, dy = cyp - cyg;
  ddist[0] = dx;  // d rho2 / d b0 = 2*dx*0.5
  ddist[1] = dy;
  ddist[2] = dx;
  ddist[3] = dy;
  double dterm2[4];
  for (int i = 0; i < 4; ++i) {
    const double dc2 = 2.0 * cw * dcw[i] + 2.0 * ch * dch[i];
    dterm2[i] = ddist[i] / c2 - rho2 * dc2 / (c2 * c2);
  }

  // d(alpha*v) with alpha = v / (1 - iou + v): alpha*v = v^2 / denom
  const double datan_scale = -(8.0 / (kPi * kPi)) * datan / (wp * wp + hp * hp);
  double dv[4];
  dv[0] = datan_scale * (-hp);  // dwp/db0 = -1 -> hp*dwp = -hp
  dv[1] = datan_scale * (wp);   // dhp/db1 = -1 -> -wp*dhp = wp
  dv[2] = datan_scale * (hp);
  dv[3] = datan_scale * (-wp);
  for (int i = 0; i < 4; ++i) {
    const double dav = (v * (2.0 * denom - v) / (denom * denom)) * dv[i] +
                       (v * v / (denom * denom)) * diou[i];
    grad->d[i] = -diou[i] + dterm2[i] + dav;
  }
  return loss;
}

}  // namespace

Tensor ciou_loss(const Tensor& boxes_pred, const std::array<double, 4>& box_gt) {
  if (boxes_pred.shape().size() != 2 || boxes_pred.dim(1) != 4) {
    throw ShapeError("ciou_loss: expected [M,4] boxes");
  }
  const int m = boxes_pred.dim(0);
  if (m == 0) throw ShapeError("ciou_loss: empty box set");
  const auto in = boxes_pred.data();
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    double b[4];
    for (int j = 0; j < 4; ++j) b[j] = static_cast<double>(in[static_cast<std::size_t>(i) * 4 + j]);
    loss += ciou_single(b, box_gt, nullptr);
  }
  loss /= m;

  Tensor tb = boxes_pred;
  return Tensor::make_op({1}, {static_cast<real>(loss)}, {boxes_pred},
                         [tb, box_gt, m](detail::Node& node) mutable {
                           if (!tb.requires_grad()) return;
                           const double up = static_cast<double>(node.grad[0]) / m;
                           auto g = tb.grad();
                           const auto in = tb.data();
                           for (int i = 0; i < m; ++i) {
                             double b[4];
                             for (int j = 0; j < 4; ++j) {
                               b[j] = static_cast<double>(in[static_cast<std::size_t>(i) * 4 + j]);
                             }
                             CiouGrad cg;
                             ciou_single(b, box_gt, &cg);
                             for (int j = 0; j < 4; ++j) {
                               g[static_cast<std::size_t>(i) * 4 + j] += static_cast<real>(up * cg.d[j]);
                             }
                           }
                         });
}

namespace {

struct SpeedGrad {
  double dr[6];
  double dt[3];
};

// One anchor's pose-score term. r6/t in doubles; gt fixed.
double speed_single(const double r6[6], const double t[3], const Pose& gt, SpeedGrad* grad) {
  const Vec3 r1(r6[0], r6[1], r6[2]);
  const Vec3 r2(r6[3], r6[4], r6[5]);
  const double n1 = r1.norm();
  if (n1 < 1e-8) throw DegenerateRotationError("speed_loss: degenerate 6d rotation");
  const Vec3 c1 = r1 / n1;
  const Vec3 w = r2 - c1.dot(r2) * c1;
  const double nw = w.norm();
  if (nw < 1e-8) throw DegenerateRotationError("speed_loss: degenerate 6d rotation");
  const Vec3 c2 = w / nw;
  const Vec3 c3 = c1.cross(c2);

  Mat3 R;
  R.col(0) = c1;
  R.col(1) = c2;
  R.col(2) = c3;

  const double raw = ((gt.R.transpose() * R).trace() - 1.0) * 0.5;
  const double clamped = std::clamp(raw, -1.0 + kClampMargin, 1.0 - kClampMargin);
  const double theta = std::acos(clamped);

  const Vec3 tp(t[0], t[1], t[2]);
  const Vec3 dt_vec = tp - gt.t;
  const double dist = gt.t.norm();
  if (dist <= 0.0) throw NumericalError("speed_loss: zero ground-truth distance");
  const double et = dt_vec.norm();
  const double loss = theta + et / dist;
  if (!grad) return loss;

  // dL/dR: through the clamped arccos.
  Mat3 G = Mat3::Zero();
  if (raw > -1.0 + kClampMargin && raw < 1.0 - kClampMargin) {
    const double dtheta_dc = -1.0 / std::sqrt(1.0 - clamped * clamped);
    G = dtheta_dc * 0.5 * gt.R;
  }
  const Vec3 g1 = G.col(0), g2 = G.col(1), g3 = G.col(2);

  // Backprop through the cross product and the two normalizations.
  const Vec3 gn1_from_cross = c2.cross(g3);  // <g3, dn1 x n2> = dn1 . (n2 x g3)
  const Vec3 gn2_from_cross = g3.cross(c1);  // <g3, n1 x dn2> = dn2 . (g3 x n1)
  const Vec3 gn2 = g2 + gn2_from_cross;
  const Vec3 gw = (gn2 - c2 * c2.dot(gn2)) / nw;  // P2 * gn2

  Vec3 gn1 = g1 + gn1_from_cross;
  // w = r2 - (n1 . r2) n1, so dn1 pulls back as -[(n1.r2) I + n1 r2^T]^T gw
  gn1 += -(c1.dot(r2) * gw + r2 * c1.dot(gw));
  const Vec3 gr2 = gw - c1 * c1.dot(gw);  // (I - n1 n1^T) gw
  const Vec3 gr1 = (gn1 - c1 * c1.dot(gn1)) / n1;  // P1 * gn1

  for (int i = 0; i < 3; ++i) {
    grad->dr[i] = gr1[i];
    grad->dr[3 + i] = gr2[i];
  }
  if (et > 1e-12) {
    for (int i = 0; i < 3; ++i) grad->dt[i] = dt_vec[i] / (et * dist);
  } else {
    for (int i = 0; i < 3; ++i) grad->dt[i] = 0.0;
  }
  return loss;
}

}  // namespace

Tensor speed_loss(const Tensor& rot6d_pred, const Tensor& trans_pred, const Pose& pose_gt) {
  if (rot6d_pred.shape().size() != 2 || rot6d_pred.dim(1) != 6) {
    throw ShapeError("speed_loss: expected [M,6] rotations");
  }
  if (trans_pred.shape().size() != 2 || trans_pred.dim(1) != 3 ||
      trans_pred.dim(0) != rot6d_pred.dim(0)) {
    throw ShapeError("speed_loss: expected matching [M,3] translations");
  }
  const int m = rot6d_pred.dim(0);
  if (m == 0) throw ShapeError("speed_loss: empty prediction set");

  const auto rin = rot6d_pred.data();
  const auto tin = trans_pred.data();
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    double r6[6], t[3];
    for (int j = 0; j < 6; ++j) r6[j] = static_cast<double>(rin[static_cast<std::size_t>(i) * 6 + j]);
    for (int j = 0; j < 3; ++j) t[j] = static_cast<double>(tin[static_cast<std::size_t>(i) * 3 + j]);
    loss += speed_single(r6, t, pose_gt, nullptr);
  }
  loss /= m;

  Tensor tr = rot6d_pred, tt = trans_pred;
  return Tensor::make_op(
      {1}, {static_cast<real>(loss)}, {rot6d_pred, trans_pred},
      [tr, tt, pose_gt, m](detail::Node& node) mutable {
        const double up = static_cast<double>(node.grad[0]) / m;
        const auto rin = tr.data();
        const auto tin = tt.data();
        for (int i = 0; i < m; ++i) {
          double r6[6], t[3];
          for (int j = 0; j < 6; ++j) r6[j] = static_cast<double>(rin[static_cast<std::size_t>(i) * 6 + j]);
          for (int j = 0; j < 3; ++j) t[j] = static_cast<double>(tin[static_cast<std::size_t>(i) * 3 + j]);
          SpeedGrad sg;
          speed_single(r6, t, pose_gt, &sg);
          if (tr.requires_grad()) {
            auto g = tr.grad();
            for (int j = 0; j < 6; ++j) g[static_cast<std::size_t>(i) * 6 + j] += static_cast<real>(up * sg.dr[j]);
          }
          if (tt.requires_grad()) {
            auto g = tt.grad();
            for (int j = 0; j < 3; ++j) g[static_cast<std::size_t>(i) * 3 + j] += static_cast<real>(up * sg.dt[j]);
          }
        }
      });
}

Tensor heatmap_mse(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) throw ShapeError("heatmap_mse: shape mismatch");
  const auto n = static_cast<std::size_t>(pred.numel());
  const auto p = pred.data();
  const auto t = target.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    loss += d * d;
  }
  loss /= static_cast<double>(n);

  Tensor tp = pred, tt = target;
  return Tensor::make_op({1}, {static_cast<real>(loss)}, {pred},
                         [tp, tt, n](detail::Node& node) mutable {
                           if (!tp.requires_grad()) return;
                           const real up = node.grad[0] * static_cast<real>(2.0 / static_cast<double>(n));
                           auto g = tp.grad();
                           const auto p = tp.data();
                           const auto t = tt.data();
                           for (std::size_t i = 0; i < n; ++i) g[i] += up * (p[i] - t[i]);
                         });
}

Tensor heatmap_mse_weighted(const Tensor& pred, const Tensor& target,
                            std::span<const real> channel_weights) {
  if (pred.shape() != target.shape() || pred.shape().size() != 4) {
    throw ShapeError("heatmap_mse_weighted: expected matching [N,K,h,w]");
  }
  const int n = pred.dim(0), k = pred.dim(1);
  const std::size_t plane = static_cast<std::size_t>(pred.dim(2)) * pred.dim(3);
  if (channel_weights.size() != static_cast<std::size_t>(n) * k) {
    throw ShapeError("heatmap_mse_weighted: weight count mismatch");
  }
  const auto p = pred.data();
  const auto t = target.data();

  std::vector<double> sample_norm(static_cast<std::size_t>(n), 1.0);
  double loss = 0.0;
  for (int ni = 0; ni < n; ++ni) {
    double wsum = 0.0;
    for (int c = 0; c < k; ++c) wsum += static_cast<double>(channel_weights[static_cast<std::size_t>(ni) * k + c]);
    sample_norm[static_cast<std::size_t>(ni)] = std::max(1.0, wsum) * static_cast<double>(plane);
    double sample_loss = 0.0;
    for (int c = 0; c < k; ++c) {
      const double w = static_cast<double>(channel_weights[static_cast<std::size_t>(ni) * k + c]);
      const std::size_t base = (static_cast<std::size_t>(ni) * k + c) * plane;
      double sse = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = static_cast<double>(p[base + i]) - static_cast<double>(t[base + i]);
        sse += d * d;
      }
      // Invisible channels (w == 0) still regress to their zero targets.
      sample_loss += (w > 0 ? w : 1.0) * sse;
    }
    loss += sample_loss / sample_norm[static_cast<std::size_t>(ni)];
  }
  loss /= n;

  Tensor tp = pred, tt = target;
  std::vector<real> held_w(channel_weights.begin(), channel_weights.end());
  auto norms = std::make_shared<std::vector<double>>(std::move(sample_norm));
  return Tensor::make_op(
      {1}, {static_cast<real>(loss)}, {pred},
      [tp, tt, held_w, norms, n, k, plane](detail::Node& node) mutable {
        if (!tp.requires_grad()) return;
        const double up = static_cast<double>(node.grad[0]) / n;
        auto g = tp.grad();
        const auto p = tp.data();
        const auto t = tt.data();
        for (int ni = 0; ni < n; ++ni) {
          for (int c = 0; c < k; ++c) {
            const double w0 = static_cast<double>(held_w[static_cast<std::size_t>(ni) * k + c]);
            const double w = w0 > 0 ? w0 : 1.0;
            const double scale = up * 2.0 * w / (*norms)[static_cast<std::size_t>(ni)];
            const std::size_t base = (static_cast<std::size_t>(ni) * k + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              g[base + i] += static_cast<real>(scale * (static_cast<double>(p[base + i]) -
                                                        static_cast<double>(t[base + i])));
            }
          }
        }
      });
}

Tensor seg_bce(const Tensor& logits, const Tensor& mask) {
  if (logits.shape() != mask.shape()) throw ShapeError("seg_bce: shape mismatch");
  const auto n = static_cast<std::size_t>(logits.numel());
  const auto x = logits.data();
  const auto y = mask.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = static_cast<double>(x[i]);
    const double yi = static_cast<double>(y[i]);
    loss += std::max(xi, 0.0) - xi * yi + softplus(-std::abs(xi));
  }
  loss /= static_cast<double>(n);

  Tensor tx = logits, ty = mask;
  return Tensor::make_op({1}, {static_cast<real>(loss)}, {logits},
                         [tx, ty, n](detail::Node& node) mutable {
                           if (!tx.requires_grad()) return;
                           const double up = static_cast<double>(node.grad[0]) / static_cast<double>(n);
                           auto g = tx.grad();
                           const auto x = tx.data();
                           const auto y = ty.data();
                           for (std::size_t i = 0; i < n; ++i) {
                             const double s = sigmoid_d(static_cast<double>(x[i]));
                             g[i] += static_cast<real>(up * (s - static_cast<double>(y[i])));
                           }
                         });
}

Tensor entropy_loss(const Tensor& seg_logits, EntropyForm form) {
  const auto n = static_cast<std::size_t>(seg_logits.numel());
  const auto x = seg_logits.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = static_cast<double>(x[i]);
    const double s = sigmoid_d(xi);
    const double log_s = -softplus(-xi);
    loss += -s * log_s;
    if (form == EntropyForm::FullBinary) {
      const double log_q = -xi - softplus(-xi);
      loss += -(1.0 - s) * log_q;
    }
  }

  Tensor tx = seg_logits;
  return Tensor::make_op({1}, {static_cast<real>(loss)}, {seg_logits},
                         [tx, form](detail::Node& node) mutable {
                           if (!tx.requires_grad()) return;
                           const double up = static_cast<double>(node.grad[0]);
                           auto g = tx.grad();
                           const auto x = tx.data();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             const double xi = static_cast<double>(x[i]);
                             const double s = sigmoid_d(xi);
                             const double log_s = -softplus(-xi);
                             double d = -s * (1.0 - s) * (1.0 + log_s);
                             if (form == EntropyForm::FullBinary) {
                               const double log_q = -xi - softplus(-xi);
                               d += s * (1.0 - s) * (1.0 + log_q);
                             }
                             g[i] += static_cast<real>(up * d);
                           }
                         });
}

Tensor total_loss(const std::vector<Tensor>& head_losses) {
  if (head_losses.empty()) throw ConfigError("total_loss: empty head set");
  Tensor out = head_losses[0];
  for (std::size_t i = 1; i < head_losses.size(); ++i) out = add(out, head_losses[i]);
  return out;
}

SATPOSE_NS_END
