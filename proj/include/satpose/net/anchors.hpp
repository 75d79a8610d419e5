#pragma once

#include <array>
#include <vector>

#include "satpose/net/arch.hpp"

SATPOSE_NS_BEGIN

struct Anchor {
  double cx, cy, w, h;  // pixels
};

// Anchors tile each detection level deterministically: rows scan y, then x,
// then the 9 per-cell shapes (3 aspect ratios x 3 octave scales). Row order
// matches the anchors_to_rows flattening of the head outputs.
struct AnchorSet {
  std::vector<int> levels;
  std::vector<int> level_begin;  // per level, offset into `anchors`; back() = total
  std::vector<Anchor> anchors;

  int total() const { return static_cast<int>(anchors.size()); }
};

AnchorSet build_anchors(const ArchConfig& cfg);

std::array<double, 4> anchor_box(const Anchor& a);  // xyxy

// RetinaNet-style box transform pair (encode then decode is the identity).
std::array<double, 4> decode_box(const Anchor& a, const std::array<double, 4>& deltas);
std::array<double, 4> encode_box(const Anchor& a, const std::array<double, 4>& box_xyxy);

SATPOSE_NS_END
