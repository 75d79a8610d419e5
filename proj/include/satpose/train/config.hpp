#pragma once

#include <array>
#include <cstdint>

#include "satpose/data/augment.hpp"
#include "satpose/loss/losses.hpp"
#include "satpose/net/arch.hpp"
#include "satpose/util/toml.hpp"

SATPOSE_NS_BEGIN

struct TrainConfig {
  int epochs = 20;
  int batch_size = 8;
  double lr_initial = 1e-3;
  double lr_decay_factor = 0.1;
  std::array<double, 2> decay_epoch_fractions = {0.75, 0.90};
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  HeadSet head_set;
  AugmentConfig aug;
  ArchConfig arch;
  double heatmap_sigma = 2.0;  // cells at 1/4 resolution
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency, 1 = deterministic single-thread
};

// Piecewise-constant schedule: lr_initial until 75% of the epochs, then x0.1,
// then x0.01 from 90% on (the fractions generalize the fixed-epoch variant).
double lr_schedule(int epoch, const TrainConfig& cfg);

struct OdrConfig {
  int stat_period = 4;     // B: images between running-statistic updates
  int total_images = 512;  // N
  double momentum = 0.9;   // m of the running-average update
  double lr = 1e-4;        // offline initial lr x 0.1
  EntropyForm entropy_form = EntropyForm::PaperLiteral;
  std::uint64_t seed = 1;
  int probe_batch = 8;
  int threads = 0;
};

struct GenRunConfig {
  int count = 100;
  std::string domain = "source";
  std::uint64_t seed = 1;
  double depth_min = 3.0;
  double depth_max = 10.0;
  double margin_px = 16.0;
  int threads = 0;
};

// TOML bindings ([arch], [train], [odr], [data] sections + overrides).
ArchConfig arch_from_toml(const TomlTable& t);
TrainConfig train_config_from_toml(const TomlTable& t);
OdrConfig odr_config_from_toml(const TomlTable& t);
GenRunConfig gen_config_from_toml(const TomlTable& t);

// Serialization of the fully resolved configs (for run manifests).
std::string train_config_to_toml(const TrainConfig& cfg);
std::string odr_config_to_toml(const OdrConfig& cfg);
std::string gen_config_to_toml(const GenRunConfig& cfg);

SATPOSE_NS_END
