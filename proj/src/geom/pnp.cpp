#include "satpose/geom/pnp.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace satpose {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Mat3 exp_so3(const Vec3& w) {
  const double th = w.norm();
  if (th < 1e-12) return Mat3::Identity() + skew(w);
  const Vec3 a = w / th;
  const Mat3 A = skew(a);
  return Mat3::Identity() + std::sin(th) * A + (1.0 - std::cos(th)) * A * A;
}

// Sum of squared weighted pixel residuals; infinity when a point has
// nonpositive depth.
double cost_of(const Pose& pose, std::span<const Vec2> pts2d, std::span<const Vec3> pts3d,
               const CameraIntrinsics& K, std::span<const double> w) {
  double cost = 0.0;
  for (std::size_t i = 0; i < pts3d.size(); ++i) {
    const Vec3 p = pose.R * pts3d[i] + pose.t;
    if (p.z() <= 1e-9) return std::numeric_limits<double>::infinity();
    const double du = K.fx * p.x() / p.z() + K.cx - pts2d[i].x();
    const double dv = K.fy * p.y() / p.z() + K.cy - pts2d[i].y();
    const double wi = w.empty() ? 1.0 : w[i];
    cost += wi * (du * du + dv * dv);
  }
  return cost;
}

// Minimizes the weighted reprojection cost with Levenberg-damped
// Gauss-Newton over (so3 twist, translation).
bool refine(Pose& pose, std::span<const Vec2> pts2d, std::span<const Vec3> pts3d,
            const CameraIntrinsics& K, std::span<const double> w, int& iters) {
  double lambda = 1e-6;
  double cost = cost_of(pose, pts2d, pts3d, K, w);
  if (!std::isfinite(cost)) return false;

  for (iters = 0; iters < 100; ++iters) {
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < pts3d.size(); ++i) {
      const Vec3 p = pose.R * pts3d[i] + pose.t;
      const double iz = 1.0 / p.z();
      const double wi = w.empty() ? 1.0 : w[i];
      Eigen::Matrix<double, 2, 3> duv_dp;
      duv_dp << K.fx * iz, 0, -K.fx * p.x() * iz * iz, 0, K.fy * iz, -K.fy * p.y() * iz * iz;
      Eigen::Matrix<double, 2, 6> J;
      J.block<2, 3>(0, 0) = -duv_dp * skew(p - pose.t);  // d p_cam / d omega = -[R X]x
      J.block<2, 3>(0, 3) = duv_dp;
      const Vec2 r(K.fx * p.x() * iz + K.cx - pts2d[i].x(),
                   K.fy * p.y() * iz + K.cy - pts2d[i].y());
      H += wi * J.transpose() * J;
      g += wi * J.transpose() * r;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::Matrix<double, 6, 6> Hd = H;
      for (int d = 0; d < 6; ++d) Hd(d, d) += lambda * std::max(H(d, d), 1e-12);
      const Eigen::Matrix<double, 6, 1> delta = Hd.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Pose trial;
      trial.R = exp_so3(delta.head<3>()) * pose.R;
      trial.t = pose.t + delta.tail<3>();
      const double trial_cost = cost_of(trial, pts2d, pts3d, K, w);
      if (trial_cost < cost) {
        pose = trial;
        const double improvement = cost - trial_cost;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (delta.norm() < 1e-12 || improvement < 1e-14 * (1.0 + cost)) return true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) return cost < std::numeric_limits<double>::infinity();
  }
  return true;
}

// Direct linear transform on normalized image coordinates; the 3D points are
// Hartley-normalized for conditioning.
bool dlt_init(Pose& pose, std::span<const Vec2> pts2d, std::span<const Vec3> pts3d,
              const CameraIntrinsics& K, std::string& failure) {
  const auto n = pts3d.size();
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : pts3d) centroid += p;
  centroid /= static_cast<double>(n);
  double scale = 0.0;
  for (const auto& p : pts3d) scale += (p - centroid).norm();
  scale /= static_cast<double>(n);
  if (scale < 1e-9) {
    failure = "degenerate 3d points";
    return false;
  }

  Eigen::MatrixXd A(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 Xn = (pts3d[i] - centroid) / scale;
    const double xh = (pts2d[i].x() - K.cx) / K.fx;
    const double yh = (pts2d[i].y() - K.cy) / K.fy;
    Eigen::Matrix<double, 1, 4> Xt;
    Xt << Xn.x(), Xn.y(), Xn.z(), 1.0;
    A.row(2 * i).setZero();
    A.row(2 * i).segment<4>(0) = Xt;
    A.row(2 * i).segment<4>(8) = -xh * Xt;
    A.row(2 * i + 1).setZero();
    A.row(2 * i + 1).segment<4>(4) = Xt;
    A.row(2 * i + 1).segment<4>(8) = -yh * Xt;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  // Needs a well-defined one-dimensional null space.
  if (sv(10) < 1e-10 * sv(0)) {
    failure = "rank-deficient DLT system";
    return false;
  }
  Eigen::Matrix<double, 12, 1> p = svd.matrixV().col(11);

  // Sign so that points sit in front of the camera.
  double depth_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 Xn = (pts3d[i] - centroid) / scale;
    depth_sum += p(8) * Xn.x() + p(9) * Xn.y() + p(10) * Xn.z() + p(11);
  }
  if (depth_sum < 0) p = -p;

  Mat3 M;
  M << p(0), p(1), p(2), p(4), p(5), p(6), p(8), p(9), p(10);
  Vec3 t_n(p(3), p(7), p(11));

  // Undo the 3D normalization: X_n = (X - c)/s.
  Mat3 M_raw = M / scale;
  Vec3 t_raw = t_n - M * (centroid / scale);

  Eigen::JacobiSVD<Mat3> msvd(M_raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double det = (msvd.matrixU() * msvd.matrixV().transpose()).determinant();
  Mat3 S = Mat3::Identity();
  S(2, 2) = det;
  pose.R = msvd.matrixU() * S * msvd.matrixV().transpose();
  const double m_scale = msvd.singularValues().mean();
  if (m_scale < 1e-12) {
    failure = "degenerate DLT solution";
    return false;
  }
  pose.t = t_raw / m_scale;
  return true;
}

}  // namespace

PnpResult pnp_solve(std::span<const Vec2> points2d, std::span<const Vec3> points3d,
                    const CameraIntrinsics& K, std::span<const double> weights) {
  PnpResult res;
  if (points2d.size() != points3d.size() ||
      (!weights.empty() && weights.size() != points3d.size())) {
    res.failure = "size mismatch";
    return res;
  }
  const std::size_t n = points3d.size();
  if (n < 4) {
    res.failure = "fewer than 4 correspondences";
    return res;
  }

  std::vector<Pose> initial;
  Pose dlt_pose;
  std::string dlt_failure;
  if (n >= 6 && dlt_init(dlt_pose, points2d, points3d, K, dlt_failure)) {
    initial.push_back(dlt_pose);
  } else if (n >= 6) {
    res.failure = dlt_failure;
    return res;
  } else {
    // Underdetermined DLT; try a handful of canonical starts.
    for (int axis = 0; axis < 4; ++axis) {
      Pose p;
      if (axis > 0) p.R = axis_angle_to_matrix(Vec3::Unit(axis - 1), kPi / 2.0);
      p.t = Vec3(0, 0, 5.0);
      initial.push_back(p);
    }
  }

  double best_cost = std::numeric_limits<double>::infinity();
  for (const Pose& start : initial) {
    Pose pose = start;
    int iters = 0;
    if (!refine(pose, points2d, points3d, K, weights, iters)) continue;
    const double c = cost_of(pose, points2d, points3d, K, weights);
    if (c < best_cost) {
      best_cost = c;
      res.pose = pose;
      res.iterations = iters;
      res.ok = true;
    }
  }
  if (!res.ok) {
    res.failure = "refinement did not converge";
    return res;
  }

  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = res.pose.R * points3d[i] + res.pose.t;
    if (p.z() <= 0) {
      res.ok = false;
      res.failure = "point behind camera after refinement";
      return res;
    }
    const double du = K.fx * p.x() / p.z() + K.cx - points2d[i].x();
    const double dv = K.fy * p.y() / p.z() + K.cy - points2d[i].y();
    sq += du * du + dv * dv;
  }
  res.rms_px = std::sqrt(sq / static_cast<double>(2 * n));
  return res;
}

}  // namespace satpose
