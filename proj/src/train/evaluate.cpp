#include "satpose/train/evaluate.hpp"

#include <nlohmann/json.hpp>

#include "satpose/data/model3d.hpp"
#include "satpose/util/csv.hpp"
#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"
#include "satpose/util/thread_pool.hpp"

SATPOSE_NS_BEGIN

SampleMetrics compute_sample_metrics(const PosePrediction& pred, const Sample& sample,
                                     bool hil_thresholds) {
  SampleMetrics m;
  m.filename = sample.filename;
  m.pnp_ok = pred.pnp_ok;
  m.hh_outlier = pred.hh_outlier;
  m.rot_source = pred.rot_source;
  m.low_confidence = pred.low_confidence;

  const double dist = sample.pose.t.norm();
  if (pred.has_pose) {
    m.e_t = translation_error(pred.pose.t, sample.pose.t);
    const double e_r = rotation_error(pred.pose.R, sample.pose.R);
    m.e_r_deg = rad2deg(e_r);
    m.e_pose = e_r + m.e_t / dist;
    if (hil_thresholds) {
      m.e_pose_star = hil_score(pred.pose, sample.pose).e_pose_star;
    } else {
      m.e_pose_star = m.e_pose;
    }
    m.iou = box_iou(pred.box, sample.bbox);
  } else {
    m.e_t = dist;
    m.e_r_deg = 180.0;
    m.e_pose = kPi + 1.0;
    m.e_pose_star = m.e_pose;
    m.iou = 0.0;
  }
  if (pred.pnp_ok) {
    m.hh_e_t = translation_error(pred.hh_pose.t, sample.pose.t);
    m.hh_e_r_deg = rad2deg(rotation_error(pred.hh_pose.R, sample.pose.R));
  }
  return m;
}

MetricsReport evaluate_model(SpnModel& model, const Dataset& dataset, const EvalOptions& opt) {
  if (dataset.samples.empty()) throw DataError("evaluate: empty dataset");
  set_worker_threads(opt.threads);
  NoGradGuard no_grad;

  const auto keypoints3d = TargetModel::standard().keypoints();
  PredictOptions popt;
  popt.score_thresh = model.cfg.score_thresh;
  popt.keypoint_conf_thresh = opt.keypoint_conf_thresh;

  MetricsReport report;
  const int n = static_cast<int>(dataset.samples.size());
  for (int begin = 0; begin < n; begin += opt.batch_size) {
    const int bs = std::min(opt.batch_size, n - begin);
    std::vector<Image8> images;
    images.reserve(static_cast<std::size_t>(bs));
    for (int i = 0; i < bs; ++i) {
      images.push_back(dataset.samples[static_cast<std::size_t>(begin + i)].image);
    }
    NetworkOutput out = model.forward(images_to_tensor(images), NormMode::Eval, model.trained_heads);
    for (int i = 0; i < bs; ++i) {
      const Sample& s = dataset.samples[static_cast<std::size_t>(begin + i)];
      const PosePrediction pred =
          predict_pose(out, i, model.anchors, model.camera, keypoints3d, popt);
      report.samples.push_back(compute_sample_metrics(pred, s, opt.hil_thresholds));
    }
  }
  report.finalize();
  return report;
}

MetricsReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                  const std::filesystem::path& data_dir, const EvalOptions& opt,
                                  const std::filesystem::path& out_dir) {
  SpnModel model = load_model(checkpoint);
  const Dataset dataset = load_dataset(data_dir);
  if (dataset.camera.width != model.camera.width || dataset.camera.height != model.camera.height) {
    throw DataError("evaluate: dataset resolution does not match the checkpoint camera");
  }
  MetricsReport report = evaluate_model(model, dataset, opt);
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_metrics_csv(report, out_dir / "metrics.csv");
    write_text_file(out_dir / "summary.json", metrics_summary_json(report) + "\n");
  }
  return report;
}

void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path) {
  CsvWriter csv({"filename", "E_T", "E_R_deg", "E_pose", "E_pose_star", "IoU", "hh_outlier"});
  for (const auto& s : report.samples) {
    csv.add(s.filename);
    csv.add(s.e_t);
    csv.add(s.e_r_deg);
    csv.add(s.e_pose);
    csv.add(s.e_pose_star);
    csv.add(s.iou);
    csv.add(static_cast<long long>(s.hh_outlier ? 1 : 0));
    csv.end_row();
  }
  csv.save(path);
}

std::string metrics_summary_json(const MetricsReport& r) {
  nlohmann::json j;
  j["n"] = r.samples.size();
  j["mean_e_t"] = r.mean_e_t;
  j["mean_e_r_deg"] = r.mean_e_r_deg;
  j["mean_e_pose"] = r.mean_e_pose;
  j["mean_e_pose_star"] = r.mean_e_pose_star;
  j["mean_iou"] = r.mean_iou;
  j["hh_e_t_mean_excl_outliers"] = r.hh_e_t_mean;
  j["hh_e_r_deg_mean_excl_outliers"] = r.hh_e_r_deg_mean;
  j["outlier_count"] = r.outlier_count;
  j["pnp_fail_count"] = r.pnp_fail_count;
  j["low_confidence_count"] = r.low_confidence_count;
  return j.dump(1);
}

SATPOSE_NS_END
