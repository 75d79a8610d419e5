#include "satpose/odr/odr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "satpose/core/optim.hpp"
#include "satpose/util/csv.hpp"
#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"
#include "satpose/util/svg.hpp"
#include "satpose/util/thread_pool.hpp"

SATPOSE_NS_BEGIN

std::vector<Parameter> select_refinable_parameters(const SpnModel& model) {
  return model.reg.filtered(ParamRole::EncoderNormAffine);
}

std::vector<Tensor> select_refinable_params(const SpnModel& model) {
  std::vector<Tensor> out;
  for (const auto& p : select_refinable_parameters(model)) out.push_back(p.tensor);
  return out;
}

double refinable_fraction(const SpnModel& model) {
  const auto total = model.reg.count();
  const auto refinable = model.reg.count({ParamRole::EncoderNormAffine});
  return total > 0 ? static_cast<double>(refinable) / static_cast<double>(total) : 0.0;
}

void update_running_stats(NormLayerState& state, std::span<const double> batch_mean,
                          std::span<const double> batch_var, double momentum) {
  if (state.kind != NormKind::BatchNorm) throw ShapeError("update_running_stats: BatchNorm only");
  if (batch_mean.size() != state.running_mean.size() ||
      batch_var.size() != state.running_var.size()) {
    throw ShapeError("update_running_stats: channel count mismatch");
  }
  for (const double v : batch_var) {
    if (v < 0.0) throw NumericalError("update_running_stats: negative variance");
  }
  for (std::size_t c = 0; c < batch_mean.size(); ++c) {
    state.running_mean[c] = momentum * state.running_mean[c] + (1.0 - momentum) * batch_mean[c];
    state.running_var[c] = momentum * state.running_var[c] + (1.0 - momentum) * batch_var[c];
  }
}

void accumulate_stream_stats(StreamStats& acc, std::span<const double> image_mean,
                             std::span<const double> image_var, std::int64_t pixels) {
  acc.add_image(image_mean, image_var, pixels);
}

namespace {

// L2 drift of all BN running statistics from a snapshot.
struct StatSnapshot {
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> vars;
};

StatSnapshot snapshot_stats(const SpnModel& model) {
  StatSnapshot s;
  for (const auto& state : model.encoder_norms) {
    if (state->kind == NormKind::BatchNorm) {
      s.means.push_back(state->running_mean);
      s.vars.push_back(state->running_var);
    }
  }
  return s;
}

std::pair<double, double> drift_from(const SpnModel& model, const StatSnapshot& s0) {
  double dm = 0, dv = 0;
  std::size_t i = 0;
  for (const auto& state : model.encoder_norms) {
    if (state->kind != NormKind::BatchNorm) continue;
    for (std::size_t c = 0; c < state->running_mean.size(); ++c) {
      const double a = state->running_mean[c] - s0.means[i][c];
      const double b = state->running_var[c] - s0.vars[i][c];
      dm += a * a;
      dv += b * b;
    }
    ++i;
  }
  return {std::sqrt(dm), std::sqrt(dv)};
}

void apply_deferred_stat_updates(SpnModel& model, double momentum) {
  for (auto& state : model.encoder_norms) {
    if (state->kind != NormKind::BatchNorm || state->stream.empty()) continue;
    const auto var = state->stream.variance();
    update_running_stats(*state, state->stream.mean, var, momentum);
    state->stream.reset(state->running_mean.size());
  }
}

}  // namespace

OdrResult odr_run(SpnModel& model, const std::filesystem::path& target_dir, const OdrConfig& cfg,
                  const Dataset* probe_set) {
  set_worker_threads(cfg.threads);

  // Unlabeled stream: just the image files, consumed in seeded-shuffled order.
  const auto image_dir = target_dir / "images";
  auto files = list_files(image_dir, ".png");
  if (files.empty()) throw DataError("odr: no target images in " + image_dir.string());
  {
    Rng rng(Rng::mix(cfg.seed, 0x0D12));
    for (std::size_t i = files.size() - 1; i > 0; --i) {
      const std::size_t j = rng.uniform_index(i + 1);
      std::swap(files[i], files[j]);
    }
  }

  // Only the normalization affines of the encoder learn; everything else is
  // frozen so backward skips their weight gradients entirely.
  for (auto& p : model.reg.params()) p.tensor.set_requires_grad(false);
  auto refinable = select_refinable_params(model);
  for (auto& t : refinable) t.set_requires_grad(true);

  const bool has_bn = model.cfg.norm_kind == NormKind::BatchNorm;
  const NormMode mode = has_bn ? NormMode::OdrCollect : NormMode::Eval;
  const StatSnapshot initial = snapshot_stats(model);

  EvalOptions eval_opt;
  eval_opt.hil_thresholds = true;
  eval_opt.batch_size = cfg.probe_batch;
  eval_opt.threads = cfg.threads;

  OdrResult result;
  const int n_total = cfg.total_images;
  std::vector<int> probe_points = {0, n_total / 8, n_total / 4, n_total / 2, n_total};
  probe_points.erase(std::unique(probe_points.begin(), probe_points.end()), probe_points.end());

  auto maybe_probe = [&](int images_seen) {
    if (!probe_set) return;
    if (std::find(probe_points.begin(), probe_points.end(), images_seen) == probe_points.end()) {
      return;
    }
    OdrProbePoint p;
    p.images_seen = images_seen;
    p.report = evaluate_model(model, *probe_set, eval_opt);
    const auto [dm, dv] = drift_from(model, initial);
    p.stat_drift_mean = dm;
    p.stat_drift_var = dv;
    result.probes.push_back(std::move(p));
    std::printf("odr probe @%4d images: E*_pose %.4f  E_T %.3f  E_R %.2f deg\n", images_seen,
                result.probes.back().report.mean_e_pose_star, result.probes.back().report.mean_e_t,
                result.probes.back().report.mean_e_r_deg);
    std::fflush(stdout);
  };

  maybe_probe(0);

  // One image resident at a time, strictly sequential.
  int seen = 0;
  for (int i = 0; i < n_total; ++i) {
    if (static_cast<std::size_t>(i) >= files.size()) {
      result.stream_exhausted = true;
      std::fprintf(stderr, "odr: target stream exhausted after %d of %d images\n", seen, n_total);
      break;
    }
    const Image8 image = read_png_gray8(image_dir / files[static_cast<std::size_t>(i)]);
    const Tensor input = images_to_tensor(std::span<const Image8>(&image, 1));

    HeadSet seg_only;
    seg_only.e = false;
    seg_only.h = false;
    seg_only.s = true;
    NetworkOutput out = model.forward(input, mode, seg_only);
    Tensor loss = entropy_loss(out.seg_logits, cfg.entropy_form);
    result.entropy.push_back(static_cast<double>(loss.item()));
    if (!std::isfinite(result.entropy.back())) {
      throw NumericalError("odr: non-finite entropy at image " + std::to_string(i));
    }

    if (cfg.lr != 0.0) {
      for (auto& t : refinable) t.zero_grad();
      backward(loss, refinable);
      sgd_step(refinable, cfg.lr);
    }
    ++seen;

    if (has_bn && seen % cfg.stat_period == 0) {
      // Deferred running-average update; new stats take effect from the
      // next image on.
      apply_deferred_stat_updates(model, cfg.momentum);
    }
    maybe_probe(seen);
  }
  result.images_processed = seen;

  // Leftover pooled statistics (stream shorter than a full period) are
  // dropped rather than applied early.
  for (auto& state : model.encoder_norms) {
    if (state->kind == NormKind::BatchNorm) state->stream.reset(state->running_mean.size());
  }

  // Restore the normal training configuration of the parameter set.
  for (auto& p : model.reg.params()) p.tensor.set_requires_grad(true);
  return result;
}

void write_odr_history_csv(const OdrResult& result, const std::filesystem::path& path) {
  CsvWriter csv({"kind", "images_seen", "entropy", "probe_e_pose_star", "probe_e_t",
                 "probe_e_r_deg", "stat_drift_mean", "stat_drift_var"});
  std::size_t probe_idx = 0;
  auto emit_probes_at = [&](int images_seen) {
    while (probe_idx < result.probes.size() &&
           result.probes[probe_idx].images_seen == images_seen) {
      const auto& p = result.probes[probe_idx];
      csv.add(std::string("probe"));
      csv.add(p.images_seen);
      csv.add_blank();
      csv.add(p.report.mean_e_pose_star);
      csv.add(p.report.mean_e_t);
      csv.add(p.report.mean_e_r_deg);
      csv.add(p.stat_drift_mean);
      csv.add(p.stat_drift_var);
      csv.end_row();
      ++probe_idx;
    }
  };
  emit_probes_at(0);
  for (std::size_t i = 0; i < result.entropy.size(); ++i) {
    csv.add(std::string("step"));
    csv.add(static_cast<long long>(i + 1));
    csv.add(result.entropy[i]);
    csv.add_blank();
    csv.add_blank();
    csv.add_blank();
    csv.add_blank();
    csv.add_blank();
    csv.end_row();
    emit_probes_at(static_cast<int>(i + 1));
  }
  csv.save(path);
}

ScoreChange score_change_histogram(const MetricsReport& before, const MetricsReport& after,
                                   int bins) {
  if (before.samples.size() != after.samples.size()) {
    throw DataError("score_change: probe sets differ in size");
  }
  ScoreChange sc;
  for (std::size_t i = 0; i < before.samples.size(); ++i) {
    if (before.samples[i].filename != after.samples[i].filename) {
      throw DataError("score_change: probe sample mismatch at index " + std::to_string(i));
    }
    const double d = after.samples[i].e_pose_star - before.samples[i].e_pose_star;
    sc.filenames.push_back(before.samples[i].filename);
    sc.delta.push_back(d);
    if (d < 0) {
      ++sc.improved;
    } else if (d > 0) {
      ++sc.worsened;
    } else {
      ++sc.unchanged;
    }
  }

  double lo = 0, hi = 0;
  for (const double d : sc.delta) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const double span = std::max(1e-6, std::max(std::abs(lo), std::abs(hi)));
  if (bins % 2 == 0) ++bins;  // keep a bin centered on zero
  sc.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) {
    sc.bin_edges[static_cast<std::size_t>(b)] = -span + 2.0 * span * b / bins;
  }
  sc.counts.assign(static_cast<std::size_t>(bins), 0);
  for (const double d : sc.delta) {
    int b = static_cast<int>((d + span) / (2.0 * span) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++sc.counts[static_cast<std::size_t>(b)];
  }
  return sc;
}

void write_score_change(const ScoreChange& sc, const std::filesystem::path& csv_path,
                        const std::filesystem::path& svg_path) {
  CsvWriter csv({"filename", "delta_e_pose_star"});
  for (std::size_t i = 0; i < sc.delta.size(); ++i) {
    csv.add(sc.filenames[i]);
    csv.add(sc.delta[i]);
    csv.end_row();
  }
  csv.save(csv_path);

  SvgChartSpec spec;
  spec.title = "E*_pose change after refinement (improved " + std::to_string(sc.improved) +
               ", worsened " + std::to_string(sc.worsened) + ")";
  spec.x_label = "delta E*_pose";
  spec.y_label = "images";
  write_text_file(svg_path, svg_histogram_logy(spec, sc.bin_edges, sc.counts));
}

SATPOSE_NS_END
