#include "satpose/train/config.hpp"

#include <cmath>
#include <sstream>

#include "satpose/util/csv.hpp"
#include "satpose/util/errors.hpp"

SATPOSE_NS_BEGIN

double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.epochs) throw ConfigError("lr_schedule: epoch out of range");
  const int b1 = static_cast<int>(std::floor(cfg.decay_epoch_fractions[0] * cfg.epochs));
  const int b2 = static_cast<int>(std::floor(cfg.decay_epoch_fractions[1] * cfg.epochs));
  if (epoch >= b2) return cfg.lr_initial * cfg.lr_decay_factor * cfg.lr_decay_factor;
  if (epoch >= b1) return cfg.lr_initial * cfg.lr_decay_factor;
  return cfg.lr_initial;
}

ArchConfig arch_from_toml(const TomlTable& t) {
  ArchConfig c;
  c.input_w = static_cast<int>(t.get_int("arch.input_w", c.input_w));
  c.input_h = static_cast<int>(t.get_int("arch.input_h", c.input_h));
  c.encoder_width = static_cast<int>(t.get_int("arch.encoder_width", c.encoder_width));
  c.fusion_layers = static_cast<int>(t.get_int("arch.fusion_layers", c.fusion_layers));
  c.head_depth = static_cast<int>(t.get_int("arch.head_depth", c.head_depth));
  const auto widths = t.get_number_array("arch.backbone_widths", {});
  if (!widths.empty()) {
    c.backbone_widths.clear();
    for (const double w : widths) c.backbone_widths.push_back(static_cast<int>(w));
  }
  const std::string norm = t.get_string("arch.norm", "BN");
  if (norm != "BN" && norm != "GN") throw ConfigError("arch.norm must be BN or GN");
  c.norm_kind = norm == "BN" ? NormKind::BatchNorm : NormKind::GroupNorm;
  c.gn_groups_encoder = static_cast<int>(t.get_int("arch.gn_groups_encoder", c.gn_groups_encoder));
  c.num_keypoints = static_cast<int>(t.get_int("arch.num_keypoints", c.num_keypoints));
  c.refine_subnet = t.get_bool("arch.refine_subnet", c.refine_subnet);
  c.anchor_base_scale = t.get_double("arch.anchor_base_scale", c.anchor_base_scale);
  c.z_ref = t.get_double("arch.z_ref", c.z_ref);
  c.score_thresh = t.get_double("arch.score_thresh", c.score_thresh);
  c.bn_momentum = t.get_double("arch.bn_momentum", c.bn_momentum);
  c.norm_eps = t.get_double("arch.norm_eps", c.norm_eps);
  return c;
}

TrainConfig train_config_from_toml(const TomlTable& t) {
  TrainConfig c;
  c.arch = arch_from_toml(t);
  c.epochs = static_cast<int>(t.get_int("train.epochs", c.epochs));
  c.batch_size = static_cast<int>(t.get_int("train.batch_size", c.batch_size));
  c.lr_initial = t.get_double("train.lr_initial", c.lr_initial);
  c.lr_decay_factor = t.get_double("train.lr_decay_factor", c.lr_decay_factor);
  const auto fr = t.get_number_array("train.decay_epoch_fractions",
                                     {c.decay_epoch_fractions[0], c.decay_epoch_fractions[1]});
  if (fr.size() != 2 || !(fr[0] < fr[1]) || fr[0] <= 0 || fr[1] >= 1) {
    throw ConfigError("train.decay_epoch_fractions must be two ascending values in (0,1)");
  }
  c.decay_epoch_fractions = {fr[0], fr[1]};
  c.weight_decay = t.get_double("train.weight_decay", c.weight_decay);
  c.head_set = HeadSet::parse(t.get_string("train.heads", "EHS"));
  c.heatmap_sigma = t.get_double("train.heatmap_sigma", c.heatmap_sigma);
  c.seed = static_cast<std::uint64_t>(t.get_int("train.seed", static_cast<std::int64_t>(c.seed)));
  c.threads = static_cast<int>(t.get_int("train.threads", c.threads));
  c.aug.brightness_contrast = t.get_bool("augment.brightness_contrast", c.aug.brightness_contrast);
  c.aug.random_erase = t.get_bool("augment.random_erase", c.aug.random_erase);
  c.aug.sun_flare = t.get_bool("augment.sun_flare", c.aug.sun_flare);
  c.aug.blur = t.get_bool("augment.blur", c.aug.blur);
  c.aug.noise = t.get_bool("augment.noise", c.aug.noise);
  c.aug.probability = t.get_double("augment.probability", c.aug.probability);
  if (c.epochs <= 0 || c.batch_size <= 0) throw ConfigError("train: epochs/batch_size must be positive");
  return c;
}

OdrConfig odr_config_from_toml(const TomlTable& t) {
  OdrConfig c;
  c.stat_period = static_cast<int>(t.get_int("odr.B", c.stat_period));
  c.total_images = static_cast<int>(t.get_int("odr.N", c.total_images));
  c.momentum = t.get_double("odr.momentum", c.momentum);
  c.lr = t.get_double("odr.lr", c.lr);
  const std::string form = t.get_string("odr.entropy_form", "paper_literal");
  if (form == "paper_literal") {
    c.entropy_form = EntropyForm::PaperLiteral;
  } else if (form == "full_binary") {
    c.entropy_form = EntropyForm::FullBinary;
  } else {
    throw ConfigError("odr.entropy_form must be paper_literal or full_binary");
  }
  c.seed = static_cast<std::uint64_t>(t.get_int("odr.seed", static_cast<std::int64_t>(c.seed)));
  c.probe_batch = static_cast<int>(t.get_int("odr.probe_batch", c.probe_batch));
  c.threads = static_cast<int>(t.get_int("odr.threads", c.threads));
  if (c.stat_period < 1) throw ConfigError("odr.B must be >= 1");
  if (c.total_images < c.stat_period) throw ConfigError("odr.N must be >= odr.B");
  if (c.momentum < 0 || c.momentum > 1) throw ConfigError("odr.momentum must lie in [0,1]");
  return c;
}

GenRunConfig gen_config_from_toml(const TomlTable& t) {
  GenRunConfig c;
  c.count = static_cast<int>(t.get_int("data.count", c.count));
  c.domain = t.get_string("data.domain", c.domain);
  c.seed = static_cast<std::uint64_t>(t.get_int("data.seed", static_cast<std::int64_t>(c.seed)));
  c.depth_min = t.get_double("data.depth_min", c.depth_min);
  c.depth_max = t.get_double("data.depth_max", c.depth_max);
  c.margin_px = t.get_double("data.margin_px", c.margin_px);
  c.threads = static_cast<int>(t.get_int("data.threads", c.threads));
  if (c.count <= 0) throw ConfigError("data.count must be positive");
  if (!(c.depth_min > 0) || !(c.depth_max > c.depth_min)) {
    throw ConfigError("data.depth range must satisfy 0 < min < max");
  }
  return c;
}

namespace {

std::string bool_str(bool b) { return b ? "true" : "false"; }

void emit_arch(std::ostringstream& out, const ArchConfig& a) {
  out << "[arch]\n";
  out << "input_w = " << a.input_w << "\ninput_h = " << a.input_h << "\n";
  out << "encoder_width = " << a.encoder_width << "\nfusion_layers = " << a.fusion_layers << "\n";
  out << "head_depth = " << a.head_depth << "\n";
  out << "backbone_widths = [";
  for (std::size_t i = 0; i < a.backbone_widths.size(); ++i) {
    out << (i ? ", " : "") << a.backbone_widths[i];
  }
  out << "]\n";
  out << "norm = \"" << (a.norm_kind == NormKind::BatchNorm ? "BN" : "GN") << "\"\n";
  out << "gn_groups_encoder = " << a.gn_groups_encoder << "\n";
  out << "num_keypoints = " << a.num_keypoints << "\n";
  out << "refine_subnet = " << bool_str(a.refine_subnet) << "\n";
  out << "anchor_base_scale = " << format_g9(a.anchor_base_scale) << "\n";
  out << "z_ref = " << format_g9(a.z_ref) << "\n";
  out << "score_thresh = " << format_g9(a.score_thresh) << "\n";
  out << "bn_momentum = " << format_g9(a.bn_momentum) << "\n";
  out << "norm_eps = " << format_g9(a.norm_eps) << "\n";
}

}  // namespace

std::string train_config_to_toml(const TrainConfig& c) {
  std::ostringstream out;
  emit_arch(out, c.arch);
  out << "\n[train]\n";
  out << "epochs = " << c.epochs << "\nbatch_size = " << c.batch_size << "\n";
  out << "lr_initial = " << format_g9(c.lr_initial) << "\n";
  out << "lr_decay_factor = " << format_g9(c.lr_decay_factor) << "\n";
  out << "decay_epoch_fractions = [" << format_g9(c.decay_epoch_fractions[0]) << ", "
      << format_g9(c.decay_epoch_fractions[1]) << "]\n";
  out << "weight_decay = " << format_g9(c.weight_decay) << "\n";
  out << "heads = \"" << c.head_set.str() << "\"\n";
  out << "heatmap_sigma = " << format_g9(c.heatmap_sigma) << "\n";
  out << "seed = " << c.seed << "\nthreads = " << c.threads << "\n";
  out << "\n[augment]\n";
  out << "brightness_contrast = " << bool_str(c.aug.brightness_contrast) << "\n";
  out << "random_erase = " << bool_str(c.aug.random_erase) << "\n";
  out << "sun_flare = " << bool_str(c.aug.sun_flare) << "\n";
  out << "blur = " << bool_str(c.aug.blur) << "\n";
  out << "noise = " << bool_str(c.aug.noise) << "\n";
  out << "probability = " << format_g9(c.aug.probability) << "\n";
  return out.str();
}

std::string odr_config_to_toml(const OdrConfig& c) {
  std::ostringstream out;
  out << "[odr]\n";
  out << "B = " << c.stat_period << "\nN = " << c.total_images << "\n";
  out << "momentum = " << format_g9(c.momentum) << "\nlr = " << format_g9(c.lr) << "\n";
  out << "entropy_form = \""
      << (c.entropy_form == EntropyForm::PaperLiteral ? "paper_literal" : "full_binary") << "\"\n";
  out << "seed = " << c.seed << "\nprobe_batch = " << c.probe_batch << "\nthreads = " << c.threads
      << "\n";
  return out.str();
}

std::string gen_config_to_toml(const GenRunConfig& c) {
  std::ostringstream out;
  out << "[data]\n";
  out << "count = " << c.count << "\ndomain = \"" << c.domain << "\"\nseed = " << c.seed << "\n";
  out << "depth_min = " << format_g9(c.depth_min) << "\ndepth_max = " << format_g9(c.depth_max)
      << "\n";
  out << "margin_px = " << format_g9(c.margin_px) << "\nthreads = " << c.threads << "\n";
  return out.str();
}

SATPOSE_NS_END
