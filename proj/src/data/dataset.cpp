#include "satpose/data/dataset.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"
#include "satpose/util/rng.hpp"
#include "satpose/util/thread_pool.hpp"

namespace satpose {

CameraIntrinsics default_camera() {
  CameraIntrinsics K;
  K.fx = 360.0;
  K.fy = 360.0;
  K.cx = 96.0;
  K.cy = 64.0;
  K.width = 192;
  K.height = 128;
  return K;
}

Pose sample_pose(Rng& rng, const CameraIntrinsics& K, double depth_min, double depth_max,
                 double margin_px) {
  // Shoemake's uniform quaternion, scalar-first Hamilton convention.
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const std::array<double, 4> q = {a * std::sin(2.0 * kPi * u2), a * std::cos(2.0 * kPi * u2),
                                   b * std::sin(2.0 * kPi * u3), b * std::cos(2.0 * kPi * u3)};
  Pose pose;
  pose.R = quat_to_matrix(q);

  const double z = std::exp(rng.uniform(std::log(depth_min), std::log(depth_max)));
  const double u = rng.uniform(margin_px, K.width - margin_px);
  const double v = rng.uniform(margin_px, K.height - margin_px);
  pose.t = Vec3((u - K.cx) / K.fx * z, (v - K.cy) / K.fy * z, z);
  return pose;
}

namespace {

nlohmann::json sample_label_json(const Sample& s) {
  nlohmann::json j;
  j["filename"] = s.filename;
  const auto q = matrix_to_quat(s.pose.R);
  j["q_wxyz"] = q;
  j["t_xyz_m"] = {s.pose.t.x(), s.pose.t.y(), s.pose.t.z()};
  j["bbox_xyxy_px"] = s.bbox;
  nlohmann::json kps = nlohmann::json::array();
  for (const auto& kp : s.keypoints) kps.push_back({kp.u, kp.v, kp.visible ? 1 : 0});
  j["keypoints"] = std::move(kps);
  return j;
}

}  // namespace

std::string labels_to_json(const Dataset& dataset) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : dataset.samples) arr.push_back(sample_label_json(s));
  return arr.dump(1);
}

void write_camera_json(const CameraIntrinsics& K, const std::filesystem::path& path) {
  nlohmann::json j;
  j["fx"] = K.fx;
  j["fy"] = K.fy;
  j["cx"] = K.cx;
  j["cy"] = K.cy;
  j["width"] = K.width;
  j["height"] = K.height;
  write_text_file(path, j.dump(1) + "\n");
}

CameraIntrinsics read_camera_json(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_text_file(path));
  CameraIntrinsics K;
  K.fx = j.at("fx").get<double>();
  K.fy = j.at("fy").get<double>();
  K.cx = j.at("cx").get<double>();
  K.cy = j.at("cy").get<double>();
  K.width = j.at("width").get<int>();
  K.height = j.at("height").get<int>();
  if (K.fx <= 0 || K.fy <= 0 || K.width <= 0 || K.height <= 0) {
    throw DataError("camera.json: invalid intrinsics");
  }
  return K;
}

void generate_dataset(const GenConfig& cfg, const CameraIntrinsics& K,
                      const std::filesystem::path& out_dir) {
  if (cfg.count <= 0) throw ConfigError("generate_dataset: count must be positive");
  const DomainParams domain = DomainParams::by_name(cfg.domain);
  ensure_dir(out_dir / "images");
  ensure_dir(out_dir / "masks");

  Dataset ds;
  ds.camera = K;
  ds.samples.resize(static_cast<std::size_t>(cfg.count));

  parallel_for(static_cast<std::size_t>(cfg.count), [&](std::size_t i) {
    Rng rng = Rng::derive(cfg.seed, i);
    const Pose pose = sample_pose(rng, K, cfg.depth_min, cfg.depth_max, cfg.margin_px);
    RenderedSample r = render_scene(pose, domain, K, rng.next_u64());
    char name[32];
    std::snprintf(name, sizeof(name), "img_%06zu.png", i);
    Sample& s = ds.samples[i];
    s.filename = name;
    s.image = std::move(r.image);
    s.mask = std::move(r.mask);
    s.pose = r.pose;
    s.keypoints = std::move(r.keypoints);
    s.bbox = r.bbox;
    write_png_gray8(out_dir / "images" / name, s.image);
    write_png_gray8(out_dir / "masks" / name, s.mask);
  });

  write_camera_json(K, out_dir / "camera.json");
  write_text_file(out_dir / "labels.json", labels_to_json(ds) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir, bool with_images) {
  Dataset ds;
  ds.camera = read_camera_json(dir / "camera.json");
  const auto labels = nlohmann::json::parse(read_text_file(dir / "labels.json"));
  if (!labels.is_array()) throw DataError("labels.json: expected an array");

  ds.samples.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& j = labels[i];
    Sample& s = ds.samples[i];
    s.filename = j.at("filename").get<std::string>();
    const auto q = j.at("q_wxyz").get<std::array<double, 4>>();
    s.pose.R = quat_to_matrix(q);
    const auto t = j.at("t_xyz_m").get<std::array<double, 3>>();
    s.pose.t = Vec3(t[0], t[1], t[2]);
    s.bbox = j.at("bbox_xyxy_px").get<std::array<double, 4>>();
    for (const auto& kp : j.at("keypoints")) {
      KeypointLabel label;
      label.u = kp.at(0).get<double>();
      label.v = kp.at(1).get<double>();
      label.visible = kp.at(2).get<double>() != 0.0;
      s.keypoints.push_back(label);
    }
  }
  if (with_images) {
    parallel_for(ds.samples.size(), [&](std::size_t i) {
      Sample& s = ds.samples[i];
      s.image = read_png_gray8(dir / "images" / s.filename);
      s.mask = read_png_gray8(dir / "masks" / s.filename);
      if (s.image.width != ds.camera.width || s.image.height != ds.camera.height) {
        throw DataError("image size does not match camera.json: " + s.filename);
      }
    });
  }
  return ds;
}

}  // namespace satpose
