#include "satpose/net/anchors.hpp"

#include <cmath>

#include "satpose/util/errors.hpp"

SATPOSE_NS_BEGIN

AnchorSet build_anchors(const ArchConfig& cfg) {
  static constexpr double kRatios[3] = {0.5, 1.0, 2.0};
  static const double kScales[3] = {std::pow(2.0, 1.0 / 3.0), std::pow(2.0, 2.0 / 3.0), 2.0};

  AnchorSet set;
  set.levels = cfg.levels_e;
  for (const int level : cfg.levels_e) {
    const int stride = 1 << level;
    if (cfg.input_w % stride || cfg.input_h % stride) {
      throw ShapeError("build_anchors: input not divisible by stride " + std::to_string(stride));
    }
    set.level_begin.push_back(set.total());
    const int gw = cfg.input_w / stride;
    const int gh = cfg.input_h / stride;
    const double base = cfg.anchor_base_scale * stride;
    for (int y = 0; y < gh; ++y) {
      for (int x = 0; x < gw; ++x) {
        for (int ri = 0; ri < 3; ++ri) {
          for (int si = 0; si < 3; ++si) {
            Anchor a;
            a.cx = (x + 0.5) * stride;
            a.cy = (y + 0.5) * stride;
            const double size = base * kScales[si];
            a.w = size * std::sqrt(kRatios[ri]);
            a.h = size / std::sqrt(kRatios[ri]);
            set.anchors.push_back(a);
          }
        }
      }
    }
  }
  set.level_begin.push_back(set.total());
  return set;
}

std::array<double, 4> anchor_box(const Anchor& a) {
  return {a.cx - a.w / 2, a.cy - a.h / 2, a.cx + a.w / 2, a.cy + a.h / 2};
}

std::array<double, 4> decode_box(const Anchor& a, const std::array<double, 4>& d) {
  const double cx = a.cx + d[0] * a.w;
  const double cy = a.cy + d[1] * a.h;
  const double w = a.w * std::exp(d[2]);
  const double h = a.h * std::exp(d[3]);
  return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

std::array<double, 4> encode_box(const Anchor& a, const std::array<double, 4>& b) {
  const double w = b[2] - b[0];
  const double h = b[3] - b[1];
  if (w <= 0 || h <= 0) throw NumericalError("encode_box: degenerate box");
  return {((b[0] + b[2]) / 2 - a.cx) / a.w, ((b[1] + b[3]) / 2 - a.cy) / a.h, std::log(w / a.w),
          std::log(h / a.h)};
}

SATPOSE_NS_END
