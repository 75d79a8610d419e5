#pragma once

#include <string>
#include <vector>

#include "satpose/core/norm.hpp"

SATPOSE_NS_BEGIN

// Which prediction heads are active (E: detection+pose regression,
// H: keypoint heatmaps, S: foreground segmentation).
struct HeadSet {
  bool e = true;
  bool h = true;
  bool s = true;

  static HeadSet parse(const std::string& text);  // e.g. "EHS", "EH", "H"
  std::string str() const;
  bool any() const { return e || h || s; }
};

// Desk-scale architecture. The encoder emits pyramid levels 2..5 (stride 4
// to 32); bidirectional fusion runs over all of them; the detection head
// consumes levels 3..5 and the dense heads the level-2 feature.
struct ArchConfig {
  int input_w = 192;
  int input_h = 128;
  int encoder_width = 32;                          // pyramid width after the lateral projections
  int fusion_layers = 2;                           // bidirectional passes
  int head_depth = 2;                              // conv blocks per head subnet
  std::vector<int> backbone_widths = {16, 24, 40, 64, 96};  // stem + stages L2..L5
  NormKind norm_kind = NormKind::BatchNorm;        // encoder normalization
  int gn_groups_encoder = 8;
  int head_gn_channel_group = 16;                  // channels per group in head GN
  int num_keypoints = 11;
  std::vector<int> levels_e = {3, 4, 5};
  int level_hs = 2;
  bool refine_subnet = false;  // optional extra block in the rot/trans subnets
  double anchor_base_scale = 4.0;
  double z_ref = 5.5;          // depth decode reference, meters
  double score_thresh = 0.05;  // detection objectness threshold
  double bn_momentum = 0.9;    // running <- m*running + (1-m)*batch
  double norm_eps = 1e-5;

  int head_width() const { return std::min(2 * encoder_width, 256); }
  int anchors_per_cell() const { return 9; }

  std::string to_json() const;
  static ArchConfig from_json(const std::string& text);
};

SATPOSE_NS_END
