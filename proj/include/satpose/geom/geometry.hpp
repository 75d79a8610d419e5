#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

namespace satpose {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Rigid transform from target body frame to camera frame.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
};

// Continuous 6D rotation parameterization: two 3-vectors whose Gram-Schmidt
// orthonormalization gives the first two rotation columns.
struct Rot6d {
  Vec3 r1;
  Vec3 r2;
};

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
};

// Score-zeroing thresholds for testbed calibration uncertainty.
inline constexpr double kHilTransThreshold = 2.173e-3;  // per meter of gt distance
inline constexpr double kHilRotThresholdDeg = 0.169;

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

bool is_rotation(const Mat3& R, double tol = 1e-6);

Mat3 rot6d_to_matrix(const Rot6d& r);                     // throws DegenerateRotationError
Rot6d matrix_to_rot6d(const Mat3& R);                     // first two columns
Mat3 axis_angle_to_matrix(const Vec3& axis, double angle);  // axis need not be unit
Mat3 quat_to_matrix(const std::array<double, 4>& q_wxyz);   // Hamilton, scalar first
std::array<double, 4> matrix_to_quat(const Mat3& R);        // unit, w >= 0

double rotation_error(const Mat3& R_pred, const Mat3& R_gt);  // radians, clamped arccos
double translation_error(const Vec3& t_pred, const Vec3& t_gt);
double speed_score(const Pose& pred, const Pose& gt);  // throws on zero gt distance

struct HilScore {
  double e_t_star = 0;     // meters, zeroed below threshold
  double e_r_star = 0;     // radians, zeroed below threshold
  double e_pose_star = 0;  // e_r_star + e_t_star / |t_gt|
};
HilScore hil_score(const Pose& pred, const Pose& gt);

Vec2 project(const Vec3& p_body, const Pose& pose, const CameraIntrinsics& K);  // throws on z<=0
std::vector<Vec2> project(std::span<const Vec3> points_body, const Pose& pose,
                          const CameraIntrinsics& K);

// Outlier iff depth outside (z_min, z_max] or the projected point leaves the
// image bounds.
bool frustum_inlier(const Vec3& t, const CameraIntrinsics& K, double z_min = 0.0,
                    double z_max = 50.0);

double box_iou(const std::array<double, 4>& a, const std::array<double, 4>& b);  // xyxy

}  // namespace satpose
