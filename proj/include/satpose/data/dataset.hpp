#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "satpose/data/render.hpp"
#include "satpose/geom/geometry.hpp"
#include "satpose/util/image.hpp"
#include "satpose/util/rng.hpp"

namespace satpose {

struct Sample {
  std::string filename;
  Image8 image;
  Image8 mask;
  Pose pose;
  std::vector<KeypointLabel> keypoints;
  std::array<double, 4> bbox{};  // xyxy pixels
};

struct Dataset {
  CameraIntrinsics camera;
  std::vector<Sample> samples;
};

CameraIntrinsics default_camera();

struct GenConfig {
  int count = 100;
  std::string domain = "source";
  std::uint64_t seed = 1;
  double depth_min = 3.0;
  double depth_max = 10.0;  // log-uniform depth range, meters
  double margin_px = 16.0;  // projected target center stays inside by this margin
};

// Renders `count` labeled samples into out_dir: images/, masks/, labels.json,
// camera.json. A pure function of (config, camera); per-sample RNG streams
// derive from (seed, index) so parallel and serial runs agree.
void generate_dataset(const GenConfig& cfg, const CameraIntrinsics& K,
                      const std::filesystem::path& out_dir);

Dataset load_dataset(const std::filesystem::path& dir, bool with_images = true);

// Pose sampling used by the generator (exposed for tests): uniform rotation,
// log-uniform depth, center backprojected from a uniformly drawn pixel.
Pose sample_pose(Rng& rng, const CameraIntrinsics& K, double depth_min, double depth_max,
                 double margin_px);

// labels.json round-trip helpers.
std::string labels_to_json(const Dataset& dataset);
void write_camera_json(const CameraIntrinsics& K, const std::filesystem::path& path);
CameraIntrinsics read_camera_json(const std::filesystem::path& path);

}  // namespace satpose
