#include "satpose/geom/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "satpose/util/errors.hpp"

namespace satpose {

bool is_rotation(const Mat3& R, double tol) {
  return (R.transpose() * R - Mat3::Identity()).norm() < tol &&
         std::abs(R.determinant() - 1.0) < tol;
}

Mat3 rot6d_to_matrix(const Rot6d& r) {
  const double n1 = r.r1.norm();
  if (n1 < 1e-8) throw DegenerateRotationError("rot6d: first vector near zero");
  const Vec3 c1 = r.r1 / n1;
  const Vec3 w = r.r2 - c1.dot(r.r2) * c1;
  const double n2 = w.norm();
  if (n2 < 1e-8) throw DegenerateRotationError("rot6d: vectors near parallel");
  const Vec3 c2 = w / n2;
  Mat3 R;
  R.col(0) = c1;
  R.col(1) = c2;
  R.col(2) = c1.cross(c2);
  return R;
}

Rot6d matrix_to_rot6d(const Mat3& R) { return Rot6d{R.col(0), R.col(1)}; }

Mat3 axis_angle_to_matrix(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n < 1e-15) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, axis / n).toRotationMatrix();
}

Mat3 quat_to_matrix(const std::array<double, 4>& q) {
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
}

std::array<double, 4> matrix_to_quat(const Mat3& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  return {q.w(), q.x(), q.y(), q.z()};
}

double rotation_error(const Mat3& R_pred, const Mat3& R_gt) {
  const double arg = ((R_gt.transpose() * R_pred).trace() - 1.0) * 0.5;
  return std::acos(std::clamp(arg, -1.0, 1.0));
}

double translation_error(const Vec3& t_pred, const Vec3& t_gt) { return (t_pred - t_gt).norm(); }

double speed_score(const Pose& pred, const Pose& gt) {
  const double dist = gt.t.norm();
  if (dist <= 0.0) throw NumericalError("speed_score: zero ground-truth distance");
  return rotation_error(pred.R, gt.R) + translation_error(pred.t, gt.t) / dist;
}

HilScore hil_score(const Pose& pred, const Pose& gt) {
  const double dist = gt.t.norm();
  if (dist <= 0.0) throw NumericalError("hil_score: zero ground-truth distance");
  const double e_t = translation_error(pred.t, gt.t);
  const double e_r = rotation_error(pred.R, gt.R);
  HilScore s;
  s.e_t_star = (e_t / dist < kHilTransThreshold) ? 0.0 : e_t;
  s.e_r_star = (rad2deg(e_r) < kHilRotThresholdDeg) ? 0.0 : e_r;
  s.e_pose_star = s.e_r_star + s.e_t_star / dist;
  return s;
}

Vec2 project(const Vec3& p_body, const Pose& pose, const CameraIntrinsics& K) {
  const Vec3 p = pose.R * p_body + pose.t;
  if (p.z() <= 0.0) throw NumericalError("project: nonpositive depth");
  return Vec2(K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy);
}

std::vector<Vec2> project(std::span<const Vec3> points_body, const Pose& pose,
                          const CameraIntrinsics& K) {
  std::vector<Vec2> out;
  out.reserve(points_body.size());
  for (const auto& p : points_body) out.push_back(project(p, pose, K));
  return out;
}

bool frustum_inlier(const Vec3& t, const CameraIntrinsics& K, double z_min, double z_max) {
  if (!(t.z() > z_min) || !(t.z() <= z_max)) return false;
  const double u = K.fx * t.x() / t.z() + K.cx;
  const double v = K.fy * t.y() / t.z() + K.cy;
  return u >= 0.0 && u < K.width && v >= 0.0 && v < K.height;
}

double box_iou(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  const double iw = std::min(a[2], b[2]) - std::max(a[0], b[0]);
  const double ih = std::min(a[3], b[3]) - std::max(a[1], b[1]);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double area_a = std::max(0.0, a[2] - a[0]) * std::max(0.0, a[3] - a[1]);
  const double area_b = std::max(0.0, b[2] - b[0]) * std::max(0.0, b[3] - b[1]);
  const double uni = area_a + area_b - inter;
  return uni > 0 ? inter / uni : 0.0;
}

}  // namespace satpose
