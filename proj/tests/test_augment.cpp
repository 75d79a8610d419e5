#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "satpose/data/augment.hpp"
#include "satpose/data/model3d.hpp"

using namespace satpose;

namespace {

Sample make_sample(std::uint64_t seed = 3) {
  const CameraIntrinsics K = default_camera();
  Rng rng(seed);
  const Pose pose = sample_pose(rng, K, 3.0, 6.0, 24.0);
  const auto r = render_scene(pose, DomainParams::source(), K, rng.next_u64());
  Sample s;
  s.filename = "x.png";
  s.image = r.image;
  s.mask = r.mask;
  s.pose = r.pose;
  s.keypoints = r.keypoints;
  s.bbox = r.bbox;
  return s;
}

}  // namespace

TEST_CASE("all-off config leaves the sample byte-identical") {
  Sample s = make_sample();
  const Sample original = s;
  Rng rng(1);
  const auto applied = augment(s, rng, AugmentConfig::all_off());
  CHECK(s.image.pixels == original.image.pixels);
  CHECK(!applied.brightness_contrast);
  CHECK(!applied.noise);
}

TEST_CASE("labels never change") {
  Sample s = make_sample();
  const Sample original = s;
  Rng rng(2);
  AugmentConfig cfg;
  cfg.probability = 1.0;
  augment(s, rng, cfg);
  CHECK(s.bbox == original.bbox);
  CHECK((s.pose.R - original.pose.R).norm() == 0.0);
  CHECK(s.mask.pixels == original.mask.pixels);
  REQUIRE(s.keypoints.size() == original.keypoints.size());
  for (std::size_t i = 0; i < s.keypoints.size(); ++i) {
    CHECK(s.keypoints[i].u == original.keypoints[i].u);
    CHECK(s.keypoints[i].visible == original.keypoints[i].visible);
  }
}

TEST_CASE("random erase and sun flare stay inside the bounding box") {
  for (const int which : {0, 1}) {
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
      Sample s = make_sample(10 + seed);
      const Sample original = s;
      AugmentConfig cfg = AugmentConfig::all_off();
      cfg.probability = 1.0;
      if (which == 0) {
        cfg.random_erase = true;
      } else {
        cfg.sun_flare = true;
      }
      Rng rng(seed);
      const auto applied = augment(s, rng, cfg);
      CHECK((which == 0 ? applied.random_erase : applied.sun_flare));
      const int x0 = static_cast<int>(std::floor(s.bbox[0]));
      const int y0 = static_cast<int>(std::floor(s.bbox[1]));
      const int x1 = static_cast<int>(std::ceil(s.bbox[2]));
      const int y1 = static_cast<int>(std::ceil(s.bbox[3]));
      for (int y = 0; y < s.image.height; ++y) {
        for (int x = 0; x < s.image.width; ++x) {
          if (x >= x0 && x < x1 && y >= y0 && y < y1) continue;
          REQUIRE(s.image.at(x, y) == original.image.at(x, y));
        }
      }
    }
  }
}

TEST_CASE("activation frequency is 0.5 within 0.02 over 10000 trials") {
  Sample base = make_sample();
  AugmentConfig cfg;  // everything enabled at p = 0.5
  long long counts[5] = {0, 0, 0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Sample s = base;
    Rng rng = Rng::derive(123, static_cast<std::uint64_t>(i));
    const auto applied = augment(s, rng, cfg);
    counts[0] += applied.brightness_contrast;
    counts[1] += applied.random_erase;
    counts[2] += applied.sun_flare;
    counts[3] += applied.blur;
    counts[4] += applied.noise;
  }
  for (const long long c : counts) {
    const double rate = static_cast<double>(c) / n;
    CHECK(rate > 0.48);
    CHECK(rate < 0.52);
  }
}

TEST_CASE("blur choice is uniform over the three kinds") {
  Sample base = make_sample();
  AugmentConfig cfg = AugmentConfig::all_off();
  cfg.blur = true;
  cfg.probability = 1.0;
  long long kinds[3] = {0, 0, 0};
  for (int i = 0; i < 3000; ++i) {
    Sample s = base;
    Rng rng = Rng::derive(55, static_cast<std::uint64_t>(i));
    const auto applied = augment(s, rng, cfg);
    REQUIRE(applied.blur);
    ++kinds[static_cast<int>(applied.blur_kind)];
  }
  for (const long long c : kinds) {
    CHECK(static_cast<double>(c) / 3000.0 == doctest::Approx(1.0 / 3.0).epsilon(0.1));
  }
}

TEST_CASE("seeded augmentation is reproducible") {
  Sample a = make_sample();
  Sample b = a;
  AugmentConfig cfg;
  Rng r1(77), r2(77);
  augment(a, r1, cfg);
  augment(b, r2, cfg);
  CHECK(a.image.pixels == b.image.pixels);
}
