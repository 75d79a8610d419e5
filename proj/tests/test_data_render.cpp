#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "satpose/data/dataset.hpp"
#include "satpose/data/model3d.hpp"
#include "satpose/util/errors.hpp"
#include "satpose/util/fsutil.hpp"

using namespace satpose;

namespace {

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "satpose_test" / name;
  std::filesystem::remove_all(dir);
  ensure_dir(dir);
  return dir;
}

}  // namespace

TEST_CASE("target model sanity") {
  const TargetModel& m = TargetModel::standard();
  CHECK(m.keypoint_vertex_ids.size() == 11);
  CHECK(m.bounding_radius() <= 0.5);  // fits the 1 m bounding sphere
  for (const int id : m.keypoint_vertex_ids) {
    CHECK(id >= 0);
    CHECK(id < static_cast<int>(m.vertices.size()));
  }
}

TEST_CASE("render determinism") {
  const CameraIntrinsics K = default_camera();
  Pose pose;
  pose.t = Vec3(0.1, -0.05, 5.0);
  pose.R = axis_angle_to_matrix(Vec3(1, 2, 3), 0.8);
  const auto a = render_scene(pose, DomainParams::source(), K, 99);
  const auto b = render_scene(pose, DomainParams::source(), K, 99);
  CHECK(a.image.pixels == b.image.pixels);
  CHECK(a.mask.pixels == b.mask.pixels);
  CHECK(a.bbox == b.bbox);
  const auto c = render_scene(pose, DomainParams::source(), K, 100);
  CHECK(a.image.pixels != c.image.pixels);
}

TEST_CASE("render centroid near the principal point for a centered target") {
  const CameraIntrinsics K = default_camera();
  Pose pose;
  pose.t = Vec3(0, 0, 5.0);
  const auto s = render_scene(pose, DomainParams::source(), K, 7);
  double cx = 0, cy = 0, n = 0;
  for (int y = 0; y < s.mask.height; ++y) {
    for (int x = 0; x < s.mask.width; ++x) {
      if (s.mask.at(x, y)) {
        cx += x + 0.5;
        cy += y + 0.5;
        n += 1;
      }
    }
  }
  REQUIRE(n > 0);
  CHECK(std::abs(cx / n - K.cx) < 2.0);
  CHECK(std::abs(cy / n - K.cy) < 2.0);
}

TEST_CASE("render label consistency") {
  const CameraIntrinsics K = default_camera();
  const auto kps3d = TargetModel::standard().keypoints();
  Rng rng(31);
  for (int i = 0; i < 12; ++i) {
    const Pose pose = sample_pose(rng, K, 3.0, 10.0, 16.0);
    const auto s = render_scene(pose, DomainParams::source(), K, rng.next_u64());

    // stored keypoints equal fresh projections
    const auto proj = project(kps3d, s.pose, K);
    REQUIRE(proj.size() == s.keypoints.size());
    for (std::size_t k = 0; k < proj.size(); ++k) {
      CHECK(std::abs(proj[k].x() - s.keypoints[k].u) < 0.5);
      CHECK(std::abs(proj[k].y() - s.keypoints[k].v) < 0.5);
      // visible keypoints land inside the dilated mask bbox and the image
      if (s.keypoints[k].visible) {
        CHECK(s.keypoints[k].u >= s.bbox[0] - 2.0);
        CHECK(s.keypoints[k].u <= s.bbox[2] + 2.0);
        CHECK(s.keypoints[k].v >= s.bbox[1] - 2.0);
        CHECK(s.keypoints[k].v <= s.bbox[3] + 2.0);
        CHECK(s.keypoints[k].u >= 0);
        CHECK(s.keypoints[k].u < K.width);
      }
    }

    // bbox is the tight box of the mask
    int bx0 = K.width, by0 = K.height, bx1 = -1, by1 = -1;
    for (int y = 0; y < s.mask.height; ++y) {
      for (int x = 0; x < s.mask.width; ++x) {
        if (s.mask.at(x, y)) {
          bx0 = std::min(bx0, x);
          by0 = std::min(by0, y);
          bx1 = std::max(bx1, x);
          by1 = std::max(by1, y);
        }
      }
    }
    CHECK(s.bbox[0] == doctest::Approx(bx0));
    CHECK(s.bbox[1] == doctest::Approx(by0));
    CHECK(s.bbox[2] == doctest::Approx(bx1 + 1));
    CHECK(s.bbox[3] == doctest::Approx(by1 + 1));
  }
}

TEST_CASE("dataset generation and reload") {
  const auto dir = temp_dir("gen");
  GenConfig cfg;
  cfg.count = 20;
  cfg.seed = 5;
  generate_dataset(cfg, default_camera(), dir);

  CHECK(list_files(dir / "images", ".png").size() == 20);
  CHECK(list_files(dir / "masks", ".png").size() == 20);

  const Dataset ds = load_dataset(dir);
  REQUIRE(ds.samples.size() == 20);
  for (const auto& s : ds.samples) {
    CHECK(!s.image.pixels.empty());
    CHECK(s.pose.t.z() >= 3.0);
    CHECK(s.pose.t.z() <= 10.0);
    CHECK(is_rotation(s.pose.R));
    CHECK(s.bbox[2] > s.bbox[0]);
    CHECK(s.keypoints.size() == 11);
  }

  // same seed twice -> byte-identical labels
  const auto dir2 = temp_dir("gen2");
  generate_dataset(cfg, default_camera(), dir2);
  CHECK(read_text_file(dir / "labels.json") == read_text_file(dir2 / "labels.json"));
  CHECK(read_binary_file(dir / "images" / "img_000003.png") ==
        read_binary_file(dir2 / "images" / "img_000003.png"));
}

TEST_CASE("pose sampler depth distribution") {
  const CameraIntrinsics K = default_camera();
  Rng rng(41);
  int in_range = 0;
  const int n = 10000;
  double log_mean = 0;
  for (int i = 0; i < n; ++i) {
    const Pose p = sample_pose(rng, K, 3.0, 10.0, 16.0);
    if (p.t.z() >= 3.0 && p.t.z() <= 10.0) ++in_range;
    log_mean += std::log(p.t.z());
  }
  CHECK(in_range == n);
  // log-uniform: mean of log(z) should sit near (ln 3 + ln 10) / 2
  log_mean /= n;
  CHECK(log_mean == doctest::Approx((std::log(3.0) + std::log(10.0)) / 2).epsilon(0.02));
}
