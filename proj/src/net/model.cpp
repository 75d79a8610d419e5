#include "satpose/net/model.hpp"

#include <nlohmann/json.hpp>

#include "satpose/net/decode.hpp"
#include "satpose/util/errors.hpp"

SATPOSE_NS_BEGIN

HeadSet HeadSet::parse(const std::string& text) {
  HeadSet set{false, false, false};
  for (const char c : text) {
    switch (c) {
      case 'E':
      case 'e':
        set.e = true;
        break;
      case 'H':
      case 'h':
        set.h = true;
        break;
      case 'S':
      case 's':
        set.s = true;
        break;
      default:
        throw ConfigError("HeadSet: unknown head '" + std::string(1, c) + "'");
    }
  }
  if (!set.any()) throw ConfigError("HeadSet: empty head set");
  return set;
}

std::string HeadSet::str() const {
  std::string out;
  if (e) out += 'E';
  if (h) out += 'H';
  if (s) out += 'S';
  return out;
}

std::string ArchConfig::to_json() const {
  nlohmann::json j;
  j["input_w"] = input_w;
  j["input_h"] = input_h;
  j["encoder_width"] = encoder_width;
  j["fusion_layers"] = fusion_layers;
  j["head_depth"] = head_depth;
  j["backbone_widths"] = backbone_widths;
  j["norm_kind"] = norm_kind == NormKind::BatchNorm ? "BN" : "GN";
  j["gn_groups_encoder"] = gn_groups_encoder;
  j["head_gn_channel_group"] = head_gn_channel_group;
  j["num_keypoints"] = num_keypoints;
  j["levels_e"] = levels_e;
  j["level_hs"] = level_hs;
  j["refine_subnet"] = refine_subnet;
  j["anchor_base_scale"] = anchor_base_scale;
  j["z_ref"] = z_ref;
  j["score_thresh"] = score_thresh;
  j["bn_momentum"] = bn_momentum;
  j["norm_eps"] = norm_eps;
  return j.dump();
}

ArchConfig ArchConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ArchConfig c;
  c.input_w = j.at("input_w").get<int>();
  c.input_h = j.at("input_h").get<int>();
  c.encoder_width = j.at("encoder_width").get<int>();
  c.fusion_layers = j.at("fusion_layers").get<int>();
  c.head_depth = j.at("head_depth").get<int>();
  c.backbone_widths = j.at("backbone_widths").get<std::vector<int>>();
  c.norm_kind = j.at("norm_kind").get<std::string>() == "BN" ? NormKind::BatchNorm : NormKind::GroupNorm;
  c.gn_groups_encoder = j.at("gn_groups_encoder").get<int>();
  c.head_gn_channel_group = j.at("head_gn_channel_group").get<int>();
  c.num_keypoints = j.at("num_keypoints").get<int>();
  c.levels_e = j.at("levels_e").get<std::vector<int>>();
  c.level_hs = j.at("level_hs").get<int>();
  c.refine_subnet = j.at("refine_subnet").get<bool>();
  c.anchor_base_scale = j.at("anchor_base_scale").get<double>();
  c.z_ref = j.at("z_ref").get<double>();
  c.score_thresh = j.at("score_thresh").get<double>();
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.norm_eps = j.at("norm_eps").get<double>();
  return c;
}

Tensor HeadSubnet::operator()(const Tensor& x, NormMode mode) {
  Tensor f = proj(x, mode);
  for (auto& block : mids) f = block(f, mode);
  return out(f);
}

namespace {

void validate(const ArchConfig& cfg) {
  if (cfg.input_w % 32 || cfg.input_h % 32) throw ConfigError("arch: input must be divisible by 32");
  if (cfg.backbone_widths.size() != 5) throw ConfigError("arch: expected 5 backbone widths");
  if (cfg.encoder_width <= 0 || cfg.fusion_layers <= 0 || cfg.head_depth <= 0) {
    throw ConfigError("arch: sizes must be positive");
  }
  if (cfg.level_hs != 2) throw ConfigError("arch: dense heads expect the level-2 feature");
  for (const int l : cfg.levels_e) {
    if (l < 3 || l > 5) throw ConfigError("arch: detection levels must lie in 3..5");
  }
  if (cfg.norm_kind == NormKind::GroupNorm) {
    for (const int w : cfg.backbone_widths) {
      if (w % cfg.gn_groups_encoder) throw ConfigError("arch: backbone width not divisible by GN groups");
    }
    if (cfg.encoder_width % cfg.gn_groups_encoder) {
      throw ConfigError("arch: encoder width not divisible by GN groups");
    }
  }
  if (cfg.head_width() % cfg.head_gn_channel_group) {
    throw ConfigError("arch: head width not divisible by the 16-channel grouping");
  }
  if (cfg.num_keypoints <= 0) throw ConfigError("arch: keypoint count must be positive");
}

ConvNormBlock make_block(ParamRegistry& reg, const std::string& name, Rng& rng, int cin, int cout,
                         int stride, const ArchConfig& cfg) {
  ConvNormBlock b;
  b.conv = make_conv2d(reg, name + ".conv", ParamRole::EncoderOther, rng, cin, cout, 3, stride, 1);
  b.norm = make_norm(reg, name + ".norm", ParamRole::EncoderNormAffine, cfg.norm_kind, cout,
                     cfg.gn_groups_encoder, cfg.norm_eps, cfg.bn_momentum);
  return b;
}

HeadSubnet make_head(ParamRegistry& reg, const std::string& name, Rng& rng, const ArchConfig& cfg,
                     int out_channels, bool refinable_extra) {
  const int hw = cfg.head_width();
  const int groups = hw / cfg.head_gn_channel_group;
  HeadSubnet net;
  net.proj.conv = make_conv2d(reg, name + ".proj.conv", ParamRole::Head, rng, cfg.encoder_width,
                              hw, 3, 1, 1);
  net.proj.norm = make_norm(reg, name + ".proj.norm", ParamRole::Head, NormKind::GroupNorm, hw,
                            groups, cfg.norm_eps);
  const int depth = cfg.head_depth + (refinable_extra && cfg.refine_subnet ? 1 : 0);
  for (int i = 0; i < depth; ++i) {
    ConvNormBlock b;
    const std::string bn = name + ".mid" + std::to_string(i);
    b.conv = make_conv2d(reg, bn + ".conv", ParamRole::Head, rng, hw, hw, 3, 1, 1);
    b.norm = make_norm(reg, bn + ".norm", ParamRole::Head, NormKind::GroupNorm, hw, groups,
                       cfg.norm_eps);
    net.mids.push_back(std::move(b));
  }
  net.out = make_conv2d(reg, name + ".out", ParamRole::Head, rng, hw, out_channels, 3, 1, 1, true);
  // Small output layer keeps early logits/regressions near their biases.
  for (auto& v : net.out.weight.data()) v *= real(0.2);
  return net;
}

}  // namespace

SpnModel build_model(const ArchConfig& cfg, const CameraIntrinsics& camera, std::uint64_t seed) {
  validate(cfg);
  if (camera.width != cfg.input_w || camera.height != cfg.input_h) {
    throw ConfigError("build_model: camera resolution does not match the architecture input");
  }
  SpnModel m;
  m.cfg = cfg;
  m.camera = camera;
  m.anchors = build_anchors(cfg);
  Rng rng(Rng::mix(seed, 0xA5C3));

  const auto& bw = cfg.backbone_widths;
  m.stem = make_block(m.reg, "encoder.stem", rng, 1, bw[0], 2, cfg);
  for (int s = 0; s < 4; ++s) {
    const int cin = bw[static_cast<std::size_t>(s)];
    const int cout = bw[static_cast<std::size_t>(s) + 1];
    const std::string name = "encoder.stage" + std::to_string(s + 2);
    m.stages.push_back({make_block(m.reg, name + ".a", rng, cin, cout, 2, cfg),
                        make_block(m.reg, name + ".b", rng, cout, cout, 1, cfg)});
  }
  for (int l = 0; l < 4; ++l) {
    const std::string name = "encoder.lateral" + std::to_string(l + 2);
    m.lateral.push_back(make_conv2d(m.reg, name + ".conv", ParamRole::EncoderOther, rng,
                                    bw[static_cast<std::size_t>(l) + 1], cfg.encoder_width, 1, 1, 0));
    m.lateral_norm.push_back(make_norm(m.reg, name + ".norm", ParamRole::EncoderNormAffine,
                                       cfg.norm_kind, cfg.encoder_width, cfg.gn_groups_encoder,
                                       cfg.norm_eps, cfg.bn_momentum));
  }
  static const char* kNodeNames[6] = {"t4", "t3", "t2", "o3", "o4", "o5"};
  for (int p = 0; p < cfg.fusion_layers; ++p) {
    std::vector<ConvNormBlock> pass;
    for (const char* node : kNodeNames) {
      const std::string name = "encoder.fusion" + std::to_string(p) + "." + node;
      pass.push_back(make_block(m.reg, name, rng, cfg.encoder_width, cfg.encoder_width, 1, cfg));
    }
    m.fusion.push_back(std::move(pass));
  }

  const int a = cfg.anchors_per_cell();
  m.cls_net = make_head(m.reg, "head.cls", rng, cfg, a * 1, false);
  m.box_net = make_head(m.reg, "head.box", rng, cfg, a * 4, false);
  m.rot_net = make_head(m.reg, "head.rot", rng, cfg, a * 6, true);
  m.trans_net = make_head(m.reg, "head.trans", rng, cfg, a * 3, true);
  m.heat_net = make_head(m.reg, "head.heat", rng, cfg, cfg.num_keypoints, false);
  m.seg_net = make_head(m.reg, "head.seg", rng, cfg, 1, false);

  // Focal-friendly objectness prior (p0 ~ 0.01) and identity-like rotation.
  for (auto& v : m.cls_net.out.bias.data()) v = real(-4.5951199);
  {
    auto bias = m.rot_net.out.bias.data();
    for (int ai = 0; ai < a; ++ai) {
      static const real kIdent[6] = {1, 0, 0, 0, 1, 0};
      for (int j = 0; j < 6; ++j) bias[static_cast<std::size_t>(ai) * 6 + j] = kIdent[j];
    }
  }

  m.encoder_norms.push_back(m.stem.norm.state);
  for (auto& stage : m.stages) {
    m.encoder_norms.push_back(stage[0].norm.state);
    m.encoder_norms.push_back(stage[1].norm.state);
  }
  for (auto& norm : m.lateral_norm) m.encoder_norms.push_back(norm.state);
  for (auto& pass : m.fusion) {
    for (auto& node : pass) m.encoder_norms.push_back(node.norm.state);
  }
  return m;
}

NetworkOutput SpnModel::forward(const Tensor& images, NormMode mode, HeadSet active) {
  if (images.shape().size() != 4 || images.dim(1) != 1) {
    throw ShapeError("forward: expected [N,1,H,W] input");
  }
  if (images.dim(2) != cfg.input_h || images.dim(3) != cfg.input_w) {
    throw ShapeError("forward: input is " + shape_str(images.shape()) + ", model expects " +
                     std::to_string(cfg.input_h) + "x" + std::to_string(cfg.input_w));
  }

  Tensor x = stem(images, mode);
  std::vector<Tensor> p;  // levels 2..5 after lateral projection
  for (int s = 0; s < 4; ++s) {
    x = stages[static_cast<std::size_t>(s)][0](x, mode);
    x = stages[static_cast<std::size_t>(s)][1](x, mode);
    Tensor lat = lateral[static_cast<std::size_t>(s)](x);
    p.push_back(lateral_norm[static_cast<std::size_t>(s)](lat, mode));
  }

  // Bidirectional fusion over levels 2..5 (full encoder evaluated in every
  // mode; only head computation is gated).
  for (auto& pass : fusion) {
    Tensor t4 = pass[0](add(p[2], upsample_nearest2x(p[3])), mode);
    Tensor t3 = pass[1](add(p[1], upsample_nearest2x(t4)), mode);
    Tensor t2 = pass[2](add(p[0], upsample_nearest2x(t3)), mode);
    Tensor o3 = pass[3](add(t3, max_pool2x2(t2)), mode);
    Tensor o4 = pass[4](add(t4, max_pool2x2(o3)), mode);
    Tensor o5 = pass[5](add(p[3], max_pool2x2(o4)), mode);
    p = {t2, o3, o4, o5};
  }

  NetworkOutput out;
  const int a = cfg.anchors_per_cell();
  if (active.e) {
    std::vector<Tensor> obj_blocks, box_blocks, rot_blocks, trans_blocks;
    for (const int level : cfg.levels_e) {
      const Tensor& f = p[static_cast<std::size_t>(level - 2)];
      obj_blocks.push_back(anchors_to_rows(cls_net(f, mode), a, 1));
      box_blocks.push_back(anchors_to_rows(box_net(f, mode), a, 4));
      rot_blocks.push_back(anchors_to_rows(rot_net(f, mode), a, 6));
      trans_blocks.push_back(anchors_to_rows(trans_net(f, mode), a, 3));
    }
    out.obj_logits = concat_rows(obj_blocks);
    out.box_deltas = concat_rows(box_blocks);
    out.rot6d = concat_rows(rot_blocks);
    out.translation = decode_translations(concat_rows(trans_blocks), anchors, camera, cfg.z_ref);
  }
  if (active.h) out.heatmaps = heat_net(p[0], mode);
  if (active.s) out.seg_logits = seg_net(p[0], mode);
  return out;
}

Tensor images_to_tensor(std::span<const Image8> images) {
  if (images.empty()) throw ShapeError("images_to_tensor: empty batch");
  const int w = images[0].width, h = images[0].height;
  std::vector<real> data(images.size() * static_cast<std::size_t>(w) * h);
  std::size_t o = 0;
  for (const auto& img : images) {
    if (img.width != w || img.height != h) throw ShapeError("images_to_tensor: mixed sizes");
    for (const std::uint8_t px : img.pixels) {
      data[o++] = (static_cast<real>(px) / real(255) - real(0.5)) / real(0.25);
    }
  }
  return Tensor::from_data({static_cast<int>(images.size()), 1, h, w}, std::move(data));
}

Checkpoint model_to_checkpoint(const SpnModel& model) {
  Checkpoint ckpt;
  nlohmann::json meta;
  meta["arch"] = nlohmann::json::parse(model.cfg.to_json());
  meta["camera"] = {{"fx", model.camera.fx}, {"fy", model.camera.fy}, {"cx", model.camera.cx},
                    {"cy", model.camera.cy}, {"width", model.camera.width},
                    {"height", model.camera.height}};
  meta["trained_heads"] = model.trained_heads.str();
  ckpt.meta_json = meta.dump();

  for (const auto& p : model.reg.params()) {
    CheckpointTensor t;
    t.name = p.name;
    t.role = param_role_name(p.role);
    t.shape = p.tensor.shape();
    t.data.reserve(static_cast<std::size_t>(p.tensor.numel()));
    for (const real v : p.tensor.data()) t.data.push_back(static_cast<float>(v));
    ckpt.tensors.push_back(std::move(t));
  }
  for (const auto& b : model.reg.buffers()) {
    CheckpointTensor t;
    t.name = b.name;
    t.role = "encoder-norm-stats";
    t.shape = {static_cast<int>(b.values->size())};
    for (const double v : *b.values) t.data.push_back(static_cast<float>(v));
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

SpnModel model_from_checkpoint(const Checkpoint& ckpt) {
  const auto meta = nlohmann::json::parse(ckpt.meta_json);
  const ArchConfig cfg = ArchConfig::from_json(meta.at("arch").dump());
  CameraIntrinsics cam;
  const auto& jc = meta.at("camera");
  cam.fx = jc.at("fx").get<double>();
  cam.fy = jc.at("fy").get<double>();
  cam.cx = jc.at("cx").get<double>();
  cam.cy = jc.at("cy").get<double>();
  cam.width = jc.at("width").get<int>();
  cam.height = jc.at("height").get<int>();

  SpnModel model = build_model(cfg, cam, 0);
  model.trained_heads = HeadSet::parse(meta.at("trained_heads").get<std::string>());

  for (auto& p : model.reg.params()) {
    const CheckpointTensor* t = ckpt.find(p.name);
    if (!t) throw DataError("checkpoint is missing tensor " + p.name);
    if (t->shape != p.tensor.shape()) {
      throw DataError("checkpoint/arch mismatch for tensor " + p.name + ": " +
                      shape_str(t->shape) + " vs " + shape_str(p.tensor.shape()));
    }
    auto dst = p.tensor.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<real>(t->data[i]);
  }
  for (auto& b : model.reg.buffers()) {
    const CheckpointTensor* t = ckpt.find(b.name);
    if (!t) throw DataError("checkpoint is missing buffer " + b.name);
    if (t->data.size() != b.values->size()) throw DataError("checkpoint buffer size mismatch: " + b.name);
    for (std::size_t i = 0; i < t->data.size(); ++i) {
      (*b.values)[i] = static_cast<double>(t->data[i]);
    }
  }
  return model;
}

void save_model(const SpnModel& model, const std::filesystem::path& path) {
  model_to_checkpoint(model).save(path);
}

SpnModel load_model(const std::filesystem::path& path) {
  return model_from_checkpoint(Checkpoint::load(path));
}

SATPOSE_NS_END
