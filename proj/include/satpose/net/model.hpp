#pragma once

#include <filesystem>

#include "satpose/core/checkpoint.hpp"
#include "satpose/core/nn.hpp"
#include "satpose/geom/geometry.hpp"
#include "satpose/net/anchors.hpp"
#include "satpose/util/image.hpp"

SATPOSE_NS_BEGIN

struct NetworkOutput {
  Tensor obj_logits;   // [N, A, 1]
  Tensor box_deltas;   // [N, A, 4]
  Tensor rot6d;        // [N, A, 6]
  Tensor translation;  // [N, A, 3], meters (camera-aware decode)
  Tensor heatmaps;     // [N, K, H/4, W/4]
  Tensor seg_logits;   // [N, 1, H/4, W/4]
};

struct ConvNormBlock {
  Conv2dLayer conv;
  NormLayer norm;

  Tensor operator()(const Tensor& x, NormMode mode) { return swish(norm(conv(x), mode)); }
};

// One shared-parameter head subnet, evaluated per pyramid level.
struct HeadSubnet {
  ConvNormBlock proj;                // encoder width -> head width
  std::vector<ConvNormBlock> mids;   // head_depth blocks (plus optional refinement)
  Conv2dLayer out;

  Tensor operator()(const Tensor& x, NormMode mode);
};

struct SpnModel {
  ArchConfig cfg;
  CameraIntrinsics camera;
  HeadSet trained_heads;  // which heads the checkpoint was trained with
  AnchorSet anchors;
  ParamRegistry reg;

  ConvNormBlock stem;                                 // stride 2
  std::vector<std::array<ConvNormBlock, 2>> stages;   // levels 2..5: [stride-2, stride-1]
  std::vector<Conv2dLayer> lateral;                   // 1x1 projections to encoder_width
  std::vector<NormLayer> lateral_norm;
  std::vector<std::vector<ConvNormBlock>> fusion;     // [pass][t4,t3,t2,o3,o4,o5]
  std::vector<std::shared_ptr<NormLayerState>> encoder_norms;  // registration order

  HeadSubnet cls_net, box_net, rot_net, trans_net;    // h_E subnets (levels 3..5)
  HeadSubnet heat_net, seg_net;                       // h_H / h_S (level 2)

  // Encoder feature maps for the active heads; level_hs feature is produced
  // only when h_H or h_S is requested, detection levels only for h_E.
  NetworkOutput forward(const Tensor& images, NormMode mode, HeadSet active = {});
};

SpnModel build_model(const ArchConfig& cfg, const CameraIntrinsics& camera,
                     std::uint64_t seed = 0);

void save_model(const SpnModel& model, const std::filesystem::path& path);
SpnModel load_model(const std::filesystem::path& path);
SpnModel model_from_checkpoint(const Checkpoint& ckpt);
Checkpoint model_to_checkpoint(const SpnModel& model);

// Converts u8 images (and masks) to normalized network input [N,1,H,W].
Tensor images_to_tensor(std::span<const Image8> images);

SATPOSE_NS_END
