#pragma once

#include <filesystem>
#include <optional>

#include "satpose/geom/metrics.hpp"
#include "satpose/net/model.hpp"
#include "satpose/train/config.hpp"
#include "satpose/train/evaluate.hpp"

SATPOSE_NS_BEGIN

// The gamma/beta of every encoder normalization layer; heads and non-norm
// encoder weights stay out.
std::vector<Tensor> select_refinable_params(const SpnModel& model);
std::vector<Parameter> select_refinable_parameters(const SpnModel& model);

// Fraction of learnable parameters the refinement may touch.
double refinable_fraction(const SpnModel& model);

// running <- m * running + (1 - m) * batch (applied to mean and variance).
void update_running_stats(NormLayerState& state, std::span<const double> batch_mean,
                          std::span<const double> batch_var, double momentum);

// Streaming pooled statistics over per-image channel stats (Chan merge).
void accumulate_stream_stats(StreamStats& acc, std::span<const double> image_mean,
                             std::span<const double> image_var, std::int64_t pixels);

struct OdrProbePoint {
  int images_seen = 0;
  MetricsReport report;
  double stat_drift_mean = 0;  // L2 distance of BN means from their initial values
  double stat_drift_var = 0;
};

struct OdrResult {
  std::vector<double> entropy;  // one entry per consumed image
  std::vector<OdrProbePoint> probes;
  int images_processed = 0;
  bool stream_exhausted = false;
};

// Sequential source-free refinement: one unlabeled image at a time through
// the encoder and the segmentation head, entropy-loss gradient steps on the
// normalization affines, plus deferred running-statistic updates every
// `stat_period` images for BatchNorm encoders. The probe set (optional,
// labeled) is only ever evaluated, never trained on.
OdrResult odr_run(SpnModel& model, const std::filesystem::path& target_dir, const OdrConfig& cfg,
                  const Dataset* probe_set);

void write_odr_history_csv(const OdrResult& result, const std::filesystem::path& path);

struct ScoreChange {
  std::vector<std::string> filenames;
  std::vector<double> delta;  // after - before, per sample
  long long improved = 0;
  long long worsened = 0;
  long long unchanged = 0;
  std::vector<double> bin_edges;
  std::vector<long long> counts;
};

// Per-sample E*_pose change between two reports over the same samples.
ScoreChange score_change_histogram(const MetricsReport& before, const MetricsReport& after,
                                   int bins = 41);

void write_score_change(const ScoreChange& sc, const std::filesystem::path& csv_path,
                        const std::filesystem::path& svg_path);

SATPOSE_NS_END
