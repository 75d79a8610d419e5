#pragma once

#include <filesystem>

#include "satpose/data/dataset.hpp"
#include "satpose/geom/metrics.hpp"
#include "satpose/net/decode.hpp"

SATPOSE_NS_BEGIN

struct EvalOptions {
  bool hil_thresholds = true;  // zero out sub-threshold component errors
  int batch_size = 8;
  double keypoint_conf_thresh = 0.3;
  int threads = 0;
};

// Per-sample metrics of one fused prediction against its label. A sample
// without any usable pose gets the worst-case convention (180 deg, distance-
// sized translation error).
SampleMetrics compute_sample_metrics(const PosePrediction& pred, const Sample& sample,
                                     bool hil_thresholds);

MetricsReport evaluate_model(SpnModel& model, const Dataset& dataset,
                             const EvalOptions& opt = {});

MetricsReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                  const std::filesystem::path& data_dir, const EvalOptions& opt,
                                  const std::filesystem::path& out_dir = {});  // writes metrics.csv

void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path);
std::string metrics_summary_json(const MetricsReport& report);

SATPOSE_NS_END
