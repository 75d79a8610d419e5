#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "satpose/geom/geometry.hpp"
#include "satpose/geom/metrics.hpp"
#include "satpose/util/errors.hpp"
#include "satpose/util/rng.hpp"

using namespace satpose;

namespace {

Mat3 random_rotation(Rng& rng) {
  const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  return axis_angle_to_matrix(axis, rng.uniform(0.0, kPi));
}

}  // namespace

TEST_CASE("rot6d canonical cases") {
  CHECK((rot6d_to_matrix({Vec3(1, 0, 0), Vec3(0, 1, 0)}) - Mat3::Identity()).norm() < 1e-12);
  // scale invariance of the normalization
  CHECK((rot6d_to_matrix({Vec3(2, 0, 0), Vec3(0, 3, 0)}) - Mat3::Identity()).norm() < 1e-12);
  CHECK_THROWS_AS(rot6d_to_matrix({Vec3(0, 0, 0), Vec3(0, 1, 0)}), DegenerateRotationError);
  CHECK_THROWS_AS(rot6d_to_matrix({Vec3(1, 0, 0), Vec3(2, 0, 0)}), DegenerateRotationError);
}

TEST_CASE("rot6d orthonormality over random inputs") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    Rot6d r;
    r.r1 = Vec3(rng.normal(), rng.normal(), rng.normal());
    r.r2 = Vec3(rng.normal(), rng.normal(), rng.normal());
    if (r.r1.norm() < 1e-3 || r.r1.cross(r.r2).norm() < 1e-3) continue;
    const Mat3 R = rot6d_to_matrix(r);
    CHECK((R.transpose() * R - Mat3::Identity()).norm() < 1e-6);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("rot6d round trip from matrices") {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const Mat3 R = random_rotation(rng);
    const Mat3 back = rot6d_to_matrix(matrix_to_rot6d(R));
    CHECK((back - R).norm() < 1e-6);
  }
}

TEST_CASE("rotation_error identities") {
  Rng rng(13);
  const Mat3 R = random_rotation(rng);
  CHECK(rotation_error(R, R) == doctest::Approx(0.0).epsilon(1e-12));

  const Mat3 flip = R * axis_angle_to_matrix(Vec3(0, 0, 1), kPi);
  CHECK(rotation_error(flip, R) == doctest::Approx(kPi).epsilon(1e-9));

  // axis-angle composition is recovered exactly
  for (int i = 0; i < 50; ++i) {
    const Mat3 base = random_rotation(rng);
    const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    const Mat3 moved = base * axis_angle_to_matrix(axis, 0.3);
    CHECK(std::abs(rotation_error(moved, base) - 0.3) < 1e-9);
    // symmetry
    CHECK(std::abs(rotation_error(moved, base) - rotation_error(base, moved)) < 1e-9);
  }
}

TEST_CASE("speed score and translation error") {
  Pose gt;
  gt.t = Vec3(0, 0, 10.0);
  Pose pred = gt;
  CHECK(speed_score(pred, gt) == doctest::Approx(0.0));

  // 0.5 rad + 1 m at 10 m -> 0.6
  pred.R = gt.R * axis_angle_to_matrix(Vec3(1, 2, 3), 0.5);
  pred.t = gt.t + Vec3(1, 0, 0);
  CHECK(speed_score(pred, gt) == doctest::Approx(0.6).epsilon(1e-9));

  // random poses vs a scalar re-implementation
  Rng rng(14);
  for (int i = 0; i < 50; ++i) {
    Pose a, b;
    a.R = random_rotation(rng);
    b.R = random_rotation(rng);
    a.t = Vec3(rng.normal(), rng.normal(), 5 + rng.uniform());
    b.t = Vec3(rng.normal(), rng.normal(), 5 + rng.uniform());
    const double trace = (b.R.transpose() * a.R).trace();
    const double er = std::acos(std::clamp((trace - 1.0) / 2.0, -1.0, 1.0));
    const double et = std::sqrt((a.t - b.t).squaredNorm());
    CHECK(speed_score(a, b) == doctest::Approx(er + et / b.t.norm()).epsilon(1e-9));
  }
  Pose zero_gt;
  zero_gt.t = Vec3::Zero();
  CHECK_THROWS_AS(speed_score(pred, zero_gt), NumericalError);
}

TEST_CASE("hil thresholds") {
  Pose gt;
  gt.t = Vec3(0, 0, 10.0);

  // 2.0 mm/m normalized translation error is zeroed
  Pose pred = gt;
  pred.t = gt.t + Vec3(0.020, 0, 0);
  HilScore s = hil_score(pred, gt);
  CHECK(s.e_t_star == 0.0);

  // just above the threshold passes through
  pred.t = gt.t + Vec3(0.0225, 0, 0);
  s = hil_score(pred, gt);
  CHECK(s.e_t_star == doctest::Approx(0.0225));

  // 0.1 degree rotation error is zeroed
  pred = gt;
  pred.R = gt.R * axis_angle_to_matrix(Vec3(0, 1, 0), deg2rad(0.1));
  s = hil_score(pred, gt);
  CHECK(s.e_r_star == 0.0);

  pred.R = gt.R * axis_angle_to_matrix(Vec3(0, 1, 0), deg2rad(0.2));
  s = hil_score(pred, gt);
  CHECK(s.e_r_star == doctest::Approx(deg2rad(0.2)).epsilon(1e-6));

  // above both thresholds the starred score equals the raw score
  pred.t = gt.t + Vec3(0.5, 0, 0);
  pred.R = gt.R * axis_angle_to_matrix(Vec3(1, 0, 0), 0.3);
  s = hil_score(pred, gt);
  CHECK(s.e_pose_star == doctest::Approx(speed_score(pred, gt)).epsilon(1e-12));

  // idempotent and never above the unthresholded score
  Rng rng(15);
  for (int i = 0; i < 50; ++i) {
    Pose p;
    p.R = random_rotation(rng);
    p.t = gt.t + 0.01 * Vec3(rng.normal(), rng.normal(), rng.normal());
    const HilScore h = hil_score(p, gt);
    CHECK(h.e_pose_star <= speed_score(p, gt) + 1e-9);
  }
}

TEST_CASE("projection") {
  CameraIntrinsics K{360, 360, 96, 64, 192, 128};
  Pose pose;
  pose.t = Vec3(0, 0, 5);
  const Vec2 center = project(Vec3(0, 0, 0), pose, K);
  CHECK(center.x() == doctest::Approx(96.0));
  CHECK(center.y() == doctest::Approx(64.0));

  const Vec2 offset = project(Vec3(0.5, 0, 0), pose, K);
  CHECK(offset.x() == doctest::Approx(96.0 + 360.0 * 0.5 / 5.0));
  CHECK(offset.y() == doctest::Approx(64.0));

  pose.t = Vec3(0, 0, -1);
  CHECK_THROWS_AS(project(Vec3(0, 0, 0), pose, K), NumericalError);
}

TEST_CASE("frustum check") {
  CameraIntrinsics K{360, 360, 96, 64, 192, 128};
  CHECK(!frustum_inlier(Vec3(0, 0, 60), K));  // beyond max distance
  CHECK(frustum_inlier(Vec3(0, 0, 5), K));
  CHECK(!frustum_inlier(Vec3(0, 0, 0), K));   // z_min exclusive
  CHECK(frustum_inlier(Vec3(0, 0, 50), K));   // z_max inclusive

  // lateral FOV edge computed from the intrinsics: u = fx*x/z + cx = width
  const double z = 20.0;
  const double x_edge = (K.width - K.cx) / K.fx * z;
  CHECK(!frustum_inlier(Vec3(x_edge + 1e-6, 0, z), K));
  CHECK(frustum_inlier(Vec3(x_edge - 1e-3, 0, z), K));
}

TEST_CASE("quaternion conventions") {
  Rng rng(16);
  for (int i = 0; i < 50; ++i) {
    const Mat3 R = random_rotation(rng);
    const auto q = matrix_to_quat(R);
    CHECK(q[0] >= 0.0);  // scalar-first, positive hemisphere
    const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((quat_to_matrix(q) - R).norm() < 1e-9);
  }
}

TEST_CASE("metrics report aggregation") {
  MetricsReport r;
  SampleMetrics a;
  a.filename = "a";
  a.e_t = 1.0;
  a.e_r_deg = 10;
  a.e_pose = 0.3;
  a.e_pose_star = 0.25;
  a.iou = 0.8;
  a.pnp_ok = true;
  a.hh_e_t = 0.5;
  SampleMetrics b = a;
  b.filename = "b";
  b.e_t = 3.0;
  b.hh_outlier = true;  // excluded from the keypoint-head translation mean
  b.hh_e_t = 100.0;
  r.samples = {a, b};
  r.finalize();
  CHECK(r.mean_e_t == doctest::Approx(2.0));
  CHECK(r.hh_e_t_mean == doctest::Approx(0.5));
  CHECK(r.outlier_count == 1);
}
