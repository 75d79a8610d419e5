#include "satpose/train/trainer.hpp"

#include <chrono>
#include <cstdio>

#include "satpose/core/optim.hpp"
#include "satpose/data/targets.hpp"
#include "satpose/net/decode.hpp"
#include "satpose/util/csv.hpp"
#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"
#include "satpose/util/thread_pool.hpp"

SATPOSE_NS_BEGIN

namespace {

Tensor mean_of(std::vector<Tensor>& terms) {
  Tensor acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return scale(acc, static_cast<real>(1.0 / static_cast<double>(terms.size())));
}

struct SampleTargets {
  AnchorTargets anchors;
  std::vector<Anchor> positive_anchors;
  Tensor heatmaps;             // [K,h,w]
  std::vector<real> weights;   // [K]
  Tensor seg;                  // [1,h,w]
};

}  // namespace

TrainResult train_offline_on(SpnModel& model, const TrainConfig& cfg, const Dataset& dataset,
                             bool verbose) {
  if (dataset.samples.empty()) throw DataError("train: empty dataset");
  set_worker_threads(cfg.threads);

  const int n = static_cast<int>(dataset.samples.size());
  const int hm_h = cfg.arch.input_h / 4;
  const int hm_w = cfg.arch.input_w / 4;
  const int k = cfg.arch.num_keypoints;

  // Labels are augmentation-invariant, so per-sample targets are built once.
  std::vector<SampleTargets> targets(static_cast<std::size_t>(n));
  {
    NoGradGuard ng;
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      const Sample& s = dataset.samples[i];
      SampleTargets& t = targets[i];
      if (cfg.head_set.e) {
        t.anchors = assign_anchors(model.anchors, s.bbox);
        for (const int row : t.anchors.positive_rows) {
          t.positive_anchors.push_back(model.anchors.anchors[static_cast<std::size_t>(row)]);
        }
      }
      if (cfg.head_set.h) {
        if (static_cast<int>(s.keypoints.size()) != k) {
          throw DataError("train: dataset has " + std::to_string(s.keypoints.size()) +
                          " keypoints, architecture expects " + std::to_string(k));
        }
        t.heatmaps = make_heatmap_targets(s.keypoints, cfg.heatmap_sigma, hm_h, hm_w);
        t.weights = heatmap_channel_weights(s.keypoints);
      }
      if (cfg.head_set.s) t.seg = seg_target_from_mask(s.mask, hm_h, hm_w);
    });
  }

  AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr_initial;
  opt_cfg.beta1 = cfg.adam_beta1;
  opt_cfg.beta2 = cfg.adam_beta2;
  opt_cfg.eps = cfg.adam_eps;
  opt_cfg.weight_decay = cfg.weight_decay;
  AdamW opt(model.reg.tensors(), opt_cfg);

  model.trained_heads = cfg.head_set;
  const int a_total = model.anchors.total();

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    opt.set_lr(lr_schedule(epoch, cfg));

    // Deterministic shuffle per epoch.
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng shuffle_rng(Rng::mix(cfg.seed, 0xE70C + static_cast<std::uint64_t>(epoch)));
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = opt.lr();
    int batches = 0;

    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int bs = std::min(cfg.batch_size, n - begin);
      std::vector<int> idx(order.begin() + begin, order.begin() + begin + bs);

      // Augment copies of the batch images (labels never change).
      std::vector<Image8> images(static_cast<std::size_t>(bs));
      parallel_for(static_cast<std::size_t>(bs), [&](std::size_t bi) {
        Sample s = dataset.samples[static_cast<std::size_t>(idx[bi])];
        Rng rng = Rng::derive(Rng::mix(cfg.seed, 0xA46),
                              static_cast<std::uint64_t>(epoch) * static_cast<std::uint64_t>(n) +
                                  static_cast<std::uint64_t>(idx[bi]));
        augment(s, rng, cfg.aug);
        images[bi] = std::move(s.image);
      });

      const Tensor input = images_to_tensor(images);
      NetworkOutput out = model.forward(input, NormMode::Train, cfg.head_set);

      std::vector<Tensor> head_losses;
      double le = 0, lh = 0, ls = 0;
      if (cfg.head_set.e) {
        std::vector<signed char> cls_targets;
        cls_targets.reserve(static_cast<std::size_t>(bs) * a_total);
        for (int bi = 0; bi < bs; ++bi) {
          const auto& t = targets[static_cast<std::size_t>(idx[static_cast<std::size_t>(bi)])];
          cls_targets.insert(cls_targets.end(), t.anchors.cls.begin(), t.anchors.cls.end());
        }
        Tensor focal = focal_loss(out.obj_logits, cls_targets);
        std::vector<Tensor> ciou_terms, speed_terms;
        for (int bi = 0; bi < bs; ++bi) {
          const auto si = static_cast<std::size_t>(idx[static_cast<std::size_t>(bi)]);
          const auto& t = targets[si];
          const Sample& s = dataset.samples[si];
          Tensor boxes = decode_boxes(gather_rows(out.box_deltas, bi, t.anchors.positive_rows),
                                      t.positive_anchors);
          ciou_terms.push_back(ciou_loss(boxes, s.bbox));
          speed_terms.push_back(speed_loss(gather_rows(out.rot6d, bi, t.anchors.positive_rows),
                                           gather_rows(out.translation, bi, t.anchors.positive_rows),
                                           s.pose));
        }
        Tensor l_e = add(focal, add(mean_of(ciou_terms), mean_of(speed_terms)));
        head_losses.push_back(l_e);
        le += static_cast<double>(l_e.item());
      }
      if (cfg.head_set.h) {
        std::vector<real> hm(static_cast<std::size_t>(bs) * k * hm_h * hm_w);
        std::vector<real> weights(static_cast<std::size_t>(bs) * k);
        for (int bi = 0; bi < bs; ++bi) {
          const auto& t = targets[static_cast<std::size_t>(idx[static_cast<std::size_t>(bi)])];
          const auto src = t.heatmaps.data();
          std::copy(src.begin(), src.end(),
                    hm.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(bi) * k * hm_h * hm_w));
          std::copy(t.weights.begin(), t.weights.end(),
                    weights.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(bi) * k));
        }
        Tensor target = Tensor::from_data({bs, k, hm_h, hm_w}, std::move(hm));
        Tensor l_h = heatmap_mse_weighted(out.heatmaps, target, weights);
        head_losses.push_back(l_h);
        lh += static_cast<double>(l_h.item());
      }
      if (cfg.head_set.s) {
        std::vector<real> seg(static_cast<std::size_t>(bs) * hm_h * hm_w);
        for (int bi = 0; bi < bs; ++bi) {
          const auto& t = targets[static_cast<std::size_t>(idx[static_cast<std::size_t>(bi)])];
          const auto src = t.seg.data();
          std::copy(src.begin(), src.end(),
                    seg.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(bi) * hm_h * hm_w));
        }
        Tensor target = Tensor::from_data({bs, 1, hm_h, hm_w}, std::move(seg));
        Tensor l_s = seg_bce(out.seg_logits, target);
        head_losses.push_back(l_s);
        ls += static_cast<double>(l_s.item());
      }

      Tensor total = total_loss(head_losses);
      const double total_val = static_cast<double>(total.item());
      if (!std::isfinite(total_val)) {
        throw NumericalError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " + std::to_string(batches));
      }
      stats.total += total_val;
      stats.loss_e += le;
      stats.loss_h += lh;
      stats.loss_s += ls;

      model.reg.zero_grad();
      auto params = model.reg.tensors();
      backward(total, params);
      opt.step();
      ++batches;
    }

    stats.total /= batches;
    stats.loss_e /= batches;
    stats.loss_h /= batches;
    stats.loss_s /= batches;
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    result.history.push_back(stats);
    if (verbose) {
      std::printf("epoch %3d  lr %.2e  total %.4f  e %.4f  h %.4f  s %.4f  (%.1fs)\n", epoch,
                  stats.lr, stats.total, stats.loss_e, stats.loss_h, stats.loss_s, stats.seconds);
      std::fflush(stdout);
    }
  }
  return result;
}

TrainResult train_offline(const TrainConfig& cfg, const std::filesystem::path& data_dir,
                          const std::filesystem::path& out_dir, bool verbose) {
  const Dataset dataset = load_dataset(data_dir);
  SpnModel model = build_model(cfg.arch, dataset.camera, cfg.seed);
  TrainResult result = train_offline_on(model, cfg, dataset, verbose);
  ensure_dir(out_dir);
  result.checkpoint_path = out_dir / "checkpoint.ckpt";
  save_model(model, result.checkpoint_path);
  write_loss_history_csv(result.history, out_dir / "loss_history.csv");
  return result;
}

void write_loss_history_csv(const std::vector<EpochStats>& history,
                            const std::filesystem::path& path) {
  CsvWriter csv({"epoch", "lr", "total", "loss_e", "loss_h", "loss_s", "seconds"});
  for (const auto& e : history) {
    csv.add(e.epoch);
    csv.add(e.lr);
    csv.add(e.total);
    csv.add(e.loss_e);
    csv.add(e.loss_h);
    csv.add(e.loss_s);
    csv.add(e.seconds);
    csv.end_row();
  }
  csv.save(path);
}

SATPOSE_NS_END
