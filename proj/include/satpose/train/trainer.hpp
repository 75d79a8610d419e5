#pragma once

#include <filesystem>

#include "satpose/data/dataset.hpp"
#include "satpose/net/model.hpp"
#include "satpose/train/config.hpp"

SATPOSE_NS_BEGIN

struct EpochStats {
  int epoch = 0;
  double lr = 0;
  double total = 0;
  double loss_e = 0;
  double loss_h = 0;
  double loss_s = 0;
  double seconds = 0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  std::filesystem::path checkpoint_path;
};

// Offline robust training: shuffled mini-batches, per-sample augmentation,
// AdamW on the summed head losses. Deterministic given (config, dataset) in
// single-thread mode; NaN loss aborts with a NumericalError.
TrainResult train_offline(const TrainConfig& cfg, const std::filesystem::path& data_dir,
                          const std::filesystem::path& out_dir, bool verbose = true);

// In-memory variant (dataset already loaded); does not write files.
TrainResult train_offline_on(SpnModel& model, const TrainConfig& cfg, const Dataset& dataset,
                             bool verbose = true);

void write_loss_history_csv(const std::vector<EpochStats>& history,
                            const std::filesystem::path& path);

SATPOSE_NS_END
